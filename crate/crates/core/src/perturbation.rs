//! Closed-form weak-coupling results. All quantities are in units where the
//! cavity frequency is 1 (Dicke-Kerr) or in the units of `zeta`/`chi`
//! (modulated cavity).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, DickeSpace, FockSpace, StateVector, C64};
use crate::models::{DickeKerrParams, ModCavityParams};
use crate::special::bessel_ratio;

/// Formulas refuse inputs whose validity score exceeds this.
pub const VALIDITY_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeInputs {
    /// Atomic frequency over cavity frequency.
    pub nu: f64,
    pub g: f64,
    pub n_qubits: usize,
    pub k: u32,
    pub eps: f64,
    pub eta: f64,
    pub zeta: f64,
    pub chi: f64,
    /// Largest photon number the result is meant for.
    pub n_max: usize,
}

impl PerturbativeInputs {
    pub fn dicke(nu: f64, g: f64, n_qubits: usize, k: u32, eps: f64, n_max: usize) -> Self {
        Self { nu, g, n_qubits, k, eps, eta: 2.0, zeta: 0.0, chi: 0.0, n_max }
    }

    /// Inputs of a Dicke-Kerr parameter set; `omega` must be 1.
    pub fn from_dicke(p: &DickeKerrParams, n_max: usize) -> Result<Self> {
        if (p.omega - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("omega", "closed forms assume unit cavity frequency"));
        }
        let n_qubits = match p.atoms {
            crate::models::Atoms::Qubits(n) => n,
            crate::models::Atoms::Oscillator => {
                return Err(Error::invalid("atoms", "use a large qubit number for the oscillator limit"))
            }
        };
        Ok(Self { nu: p.nu, g: p.g, n_qubits, k: p.k, eps: p.eps, eta: p.eta, zeta: 0.0, chi: 0.0, n_max })
    }

    pub fn from_modcav(p: &ModCavityParams, n_max: usize) -> Self {
        Self { nu: 0.0, g: 0.0, n_qubits: 0, k: p.k, eps: p.eps, eta: p.eta, zeta: p.zeta(), chi: p.chi(), n_max }
    }

    /// `g sqrt(N n_max) / |1 - nu|`.
    pub fn validity_score(&self) -> f64 {
        self.g * ((self.n_qubits * self.n_max) as f64).sqrt() / (1.0 - self.nu).abs()
    }

    pub fn check_validity(&self) -> Result<()> {
        let score = self.validity_score();
        if !(score <= VALIDITY_LIMIT) {
            return Err(Error::OutsideValidity { score, limit: VALIDITY_LIMIT });
        }
        Ok(())
    }

    fn check_modcav(&self, n: usize) -> Result<()> {
        if self.zeta == 0.0 {
            return Err(Error::invalid("zeta", "must be nonzero"));
        }
        let score = self.chi.abs() * (n as f64 + 2.0) / self.zeta.abs();
        if score > VALIDITY_LIMIT {
            return Err(Error::OutsideValidity { score, limit: VALIDITY_LIMIT });
        }
        Ok(())
    }

    fn n(&self) -> f64 {
        self.n_qubits as f64
    }
}

/// Second-order dressed state over `|atoms, photons>`, normalized, in a
/// basis with up to two atomic excitations and `n_max` photons.
pub fn dressed_state_pt(inp: &PerturbativeInputs, n: usize) -> Result<StateVector> {
    inp.check_validity()?;
    if n > inp.n_max {
        return Err(Error::invalid("n", format!("photon index {n} exceeds n_max {}", inp.n_max)));
    }
    let dicke = DickeSpace::qubits(inp.n_qubits, inp.n_qubits.min(2))?;
    let basis = Basis::Product(dicke, FockSpace::new(inp.n_max)?);
    dressed_state_pt_in(inp, n, basis)
}

/// As [`dressed_state_pt`] but expressed in a caller-supplied basis.
pub fn dressed_state_pt_in(inp: &PerturbativeInputs, n: usize, basis: Basis) -> Result<StateVector> {
    inp.check_validity()?;
    let (w, o, g, big_n) = (1.0, inp.nu, inp.g, inp.n());
    let nf = n as f64;
    let pair = |a: usize, b: usize| (a * b) as f64;
    let mut terms: Vec<(usize, i64, f64)> = vec![
        (0, 0, 1.0),
        (1, -1, g * (big_n * nf).sqrt() / (w - o)),
        (1, 1, -g * (big_n * (nf + 1.0)).sqrt() / (w + o)),
        (0, -2, big_n * g * g * (nf * (nf - 1.0)).max(0.0).sqrt() / (2.0 * w * (w - o))),
        (0, 2, g * g * big_n * pair(n + 1, n + 2).sqrt() / (2.0 * w * (w + o))),
    ];
    if inp.n_qubits >= 2 {
        let pairs = 2.0 * big_n * (big_n - 1.0);
        terms.push((2, -2, g * g * (pairs * nf * (nf - 1.0)).max(0.0).sqrt() / (2.0 * (w - o).powi(2))));
        terms.push((2, 0, g * g * pairs.sqrt() * (w - o * (2.0 * nf + 1.0)) / (2.0 * o * (w * w - o * o))));
        terms.push((2, 2, g * g * (pairs * pair(n + 1, n + 2)).sqrt() / (2.0 * (w + o).powi(2))));
    }
    let mut amp = DVector::zeros(basis.dim());
    for (atoms, shift, c) in terms.drain(..) {
        let photons = n as i64 + shift;
        if photons < 0 || c == 0.0 {
            continue;
        }
        if let Some(i) = basis.index(atoms, photons as usize) {
            amp[i] += C64::new(c, 0.0);
        }
    }
    StateVector::normalized(amp, basis)
}

/// Static Kerr coefficient that removes the photon-number dependence of the
/// two-photon gap at fourth order in `g`.
pub fn alpha_star(inp: &PerturbativeInputs) -> Result<f64> {
    let nu = inp.nu;
    if (nu - 1.0).abs() < 1e-12 {
        return Err(Error::invalid("nu", "resonant atoms (nu = 1) are outside the dispersive regime"));
    }
    Ok(-2.0 * nu * inp.g.powi(4) * inp.n() * (1.0 + 3.0 * nu * nu) / (nu * nu - 1.0).powi(3))
}

/// `(lambda_{n+2} - lambda_n) / 2` with the Kerr term set to [`alpha_star`].
pub fn gap_pt(inp: &PerturbativeInputs) -> Result<f64> {
    Ok(1.0 + gap_shift_pt(inp)?)
}

/// `gap_pt - 1`, kept separate so the small shift is not rounded against 1.
pub fn gap_shift_pt(inp: &PerturbativeInputs) -> Result<f64> {
    inp.check_validity()?;
    let (nu, g, big_n) = (inp.nu, inp.g, inp.n());
    let d = nu * nu - 1.0;
    let bracket = 1.0 - g * g * ((1.0 + 3.0 * nu * nu) + nu * ((5.0 * big_n - 8.0) - big_n * nu * nu)) / (d * d);
    Ok(-2.0 * nu * big_n * g * g / d * bracket)
}

/// `M_k(n, nu) = (n+1)^k - (1-nu)/2 (n+2)^k - (1+nu)/2 n^k`.
///
/// At `k = 1` this is `nu`; a value of `2 nu` is sometimes quoted instead.
pub fn m_k(k: u32, n: usize, nu: f64) -> f64 {
    let p = |x: usize| (x as f64).powi(k as i32);
    p(n + 1) - 0.5 * (1.0 - nu) * p(n + 2) - 0.5 * (1.0 + nu) * p(n)
}

/// `R_{n,n+2} = N eps g^2 / (2(nu^2 - 1)) sqrt((n+1)(n+2)) M_k(n, nu)`.
pub fn rate_pt(inp: &PerturbativeInputs, n: usize) -> Result<C64> {
    inp.check_validity()?;
    let d = inp.nu * inp.nu - 1.0;
    if d.abs() < 1e-12 {
        return Err(Error::invalid("nu", "pole at nu = 1"));
    }
    let value = inp.n() * inp.eps * inp.g * inp.g / (2.0 * d)
        * (((n + 1) * (n + 2)) as f64).sqrt()
        * m_k(inp.k, n, inp.nu);
    Ok(C64::new(value, 0.0))
}

/// `[(n+2)^k - n^k] / 4`; equals `n + 1` at `k = 2`.
pub fn modcav_m_k(k: u32, n: usize) -> f64 {
    let p = |x: usize| (x as f64).powi(k as i32);
    0.25 * (p(n + 2) - p(n))
}

/// `R_{n,n+2} = i eps (chi/zeta) sqrt((n+1)(n+2)) [(n+2)^k - n^k]/4`.
pub fn modcav_rate_pt(inp: &PerturbativeInputs, n: usize) -> Result<C64> {
    inp.check_modcav(n)?;
    let v = inp.eps * inp.chi / inp.zeta * (((n + 1) * (n + 2)) as f64).sqrt() * modcav_m_k(inp.k, n);
    Ok(C64::new(0.0, v))
}

/// `lambda_n = zeta n - (chi^2/zeta)(1 + chi^2/zeta^2)(2n + 1)`.
pub fn modcav_energy_pt(inp: &PerturbativeInputs, n: usize) -> Result<f64> {
    inp.check_modcav(n)?;
    let (z, c) = (inp.zeta, inp.chi);
    Ok(z * n as f64 - c * c / z * (1.0 + c * c / (z * z)) * (2.0 * n as f64 + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceVariant {
    /// `2|zeta| [1 - 2 (chi/zeta)^2 - 2 (chi/zeta)^4]`.
    Standard,
    /// `2|zeta| [1 + 4 (chi/zeta)^2]`.
    Shifted,
}

/// Modulation frequency that couples every `n -> n+2` pair of the
/// modulated cavity at once.
pub fn modcav_resonance_pt(inp: &PerturbativeInputs, variant: ResonanceVariant) -> Result<f64> {
    inp.check_modcav(0)?;
    let r = inp.chi / inp.zeta;
    let z = inp.zeta.abs();
    Ok(match variant {
        ResonanceVariant::Standard => 2.0 * z * (1.0 - 2.0 * r * r - 2.0 * r.powi(4)),
        ResonanceVariant::Shifted => 2.0 * z * (1.0 + 4.0 * r * r),
    })
}

/// Suppression of the `l`-th harmonic resonance: `(2 l J_l(q)/q,
/// q^{l-1} / (2^{l-1} (l-1)!))`.
pub fn higher_order_factor(l: u32, q: f64) -> Result<(f64, f64)> {
    if l == 0 {
        return Err(Error::invalid("l", "harmonic order starts at 1"));
    }
    if !(q.abs() < 1.0) {
        return Err(Error::invalid("q", format!("|q| < 1 required, got {q}")));
    }
    let exact = bessel_ratio(l, q);
    let fact: f64 = (1..l).map(|i| i as f64).product();
    let approx = q.powi(l as i32 - 1) / (2f64.powi(l as i32 - 1) * fact);
    Ok((exact, approx))
}

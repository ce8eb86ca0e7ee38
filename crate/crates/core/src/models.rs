//! Hamiltonians: the Dicke model with a static Kerr term, the modulated
//! cavity in the lab frame, its effective interaction-picture form, and the
//! periodic `eps sin(eta t) n^k` drive common to all of them.
//!
//! Units: the cavity frequency (`omega`, or `omega0` for the modulated
//! cavity) is 1 and every other parameter is a ratio to it.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, collective_sigma, number_power, tensor, Basis, DickeSpace, FockSpace, Operator, C64,
};

/// Collective atomic reservoir coupled to the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atoms {
    Qubits(usize),
    /// Bosonic limit; the coupling `g` is then `g_ho`.
    Oscillator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DickeKerrParams {
    pub omega: f64,
    /// Atomic transition frequency over cavity frequency.
    pub nu: f64,
    pub g: f64,
    pub alpha: f64,
    pub atoms: Atoms,
    pub k: u32,
    pub eps: f64,
    pub eta: f64,
}

impl DickeKerrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::invalid("omega", "must be positive"));
        }
        if !(self.nu > 0.0) {
            return Err(Error::invalid("nu", "must be positive"));
        }
        if !(self.g >= 0.0) {
            return Err(Error::invalid("g", format!("must be non-negative, got {}", self.g)));
        }
        if self.k < 1 {
            return Err(Error::invalid("k", "drive exponent must be at least 1"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be positive, got {}", self.eta)));
        }
        if !self.alpha.is_finite() || !self.eps.is_finite() {
            return Err(Error::invalid("alpha/eps", "must be finite"));
        }
        if self.atoms == Atoms::Qubits(0) {
            return Err(Error::invalid("n_qubits", "need at least one qubit"));
        }
        Ok(())
    }

    pub fn capital_omega(&self) -> f64 {
        self.nu * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModCavityParams {
    pub omega0: f64,
    pub omega1: f64,
    pub eps_w: f64,
    pub k: u32,
    pub eps: f64,
    pub eta: f64,
}

impl ModCavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return Err(Error::invalid("omega0", "must be positive"));
        }
        if !(self.omega1 > 0.0) {
            return Err(Error::invalid("omega1", "must be positive"));
        }
        if (self.omega1 - 2.0 * self.omega0).abs() <= 1e-12 * self.omega0 {
            return Err(Error::invalid("omega1", "omega1 = 2 omega0 is the resonant DCE case"));
        }
        if !(self.eps_w.abs() <= 0.1 * self.omega0) {
            return Err(Error::invalid("eps_w", format!("{} exceeds 0.1 omega0", self.eps_w)));
        }
        if self.eps_w.abs() > 0.02 * self.omega0 {
            warn!("eps_w = {} is not small compared with omega0", self.eps_w);
        }
        if self.k < 1 {
            return Err(Error::invalid("k", "drive exponent must be at least 1"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be positive, got {}", self.eta)));
        }
        Ok(())
    }

    /// Detuning from the parametric resonance, `omega0 - omega1 / 2`.
    pub fn zeta(&self) -> f64 {
        self.omega0 - 0.5 * self.omega1
    }

    /// Effective squeezing strength, `eps_w omega1 / (8 omega0)`.
    pub fn chi(&self) -> f64 {
        self.eps_w * self.omega1 / (8.0 * self.omega0)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        self.omega0 + self.eps_w * (self.omega1 * t).sin()
    }

    /// Coefficient of `i(a+^2 - a^2)` in the lab frame: `omega'(t) / (4 omega(t))`.
    pub fn squeeze_coefficient(&self, t: f64) -> f64 {
        let rate = self.eps_w * self.omega1 * (self.omega1 * t).cos();
        rate / (4.0 * self.omega_at(t))
    }
}

/// Scalar time dependence of one drive term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    /// `amplitude * sin(frequency t)`.
    Sine { amplitude: f64, frequency: f64 },
    /// `omega'(t) / (4 omega(t))` for `omega(t) = omega0 + eps_w sin(omega1 t)`.
    WallSqueeze { omega0: f64, eps_w: f64, omega1: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Modulation::Sine { amplitude, frequency } => amplitude * (frequency * t).sin(),
            Modulation::WallSqueeze { omega0, eps_w, omega1 } => {
                let w = omega0 + eps_w * (omega1 * t).sin();
                eps_w * omega1 * (omega1 * t).cos() / (4.0 * w)
            }
        }
    }

    /// A fixed antiderivative. The sine uses `-(A / f) cos(f t)`, which makes
    /// the dressed-frame phases match the `exp[(i eps xi / eta) cos(eta t)]`
    /// convention of the amplitude expansion.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match *self {
            Modulation::Sine { amplitude, frequency } => -(amplitude / frequency) * (frequency * t).cos(),
            Modulation::WallSqueeze { omega0, eps_w, omega1 } => {
                0.25 * ((omega0 + eps_w * (omega1 * t).sin()) / omega0).ln()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Drive {
    pub operator: Operator,
    pub modulation: Modulation,
}

/// `H(t) = H_static + sum_j f_j(t) D_j` with the matrices cached, so that a
/// time evaluation costs only scalar-weighted sums.
#[derive(Debug, Clone)]
pub struct DrivenHamiltonian {
    static_part: Operator,
    drives: Vec<Drive>,
    fast_frequency: f64,
}

impl DrivenHamiltonian {
    pub fn new(static_part: Operator, drives: Vec<Drive>, fast_frequency: f64) -> Result<Self> {
        if !static_part.is_hermitian() {
            return Err(Error::invalid("static_part", "must be Hermitian"));
        }
        for d in &drives {
            if d.operator.basis() != static_part.basis() {
                return Err(Error::BasisMismatch("drive and static part differ in basis".into()));
            }
            if !d.operator.is_hermitian() {
                return Err(Error::invalid("drive", "drive operators must be Hermitian"));
            }
        }
        Ok(Self { static_part, drives, fast_frequency })
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn basis(&self) -> Basis {
        self.static_part.basis()
    }

    /// Fastest frequency the integrator must resolve.
    pub fn fast_frequency(&self) -> f64 {
        self.fast_frequency
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        for d in &self.drives {
            let f = d.modulation.value(t);
            if f != 0.0 {
                m += d.operator.matrix() * C64::new(f, 0.0);
            }
        }
        Operator::from_parts(m, self.basis(), true)
    }
}

/// `n^k` extended by the identity on the atomic factor when present.
pub fn drive_operator(basis: Basis, k: u32) -> Result<Operator> {
    let fock = basis.fock().ok_or_else(|| Error::BasisMismatch("drive needs a Fock factor".into()))?;
    let nk = number_power(&fock, k)?;
    match basis {
        Basis::Fock(_) => Ok(nk),
        Basis::Product(d, _) => tensor(&Operator::identity(Basis::Dicke(d)), &nk),
        Basis::Dicke(_) => unreachable!(),
    }
}

/// `omega n + alpha n^2 + sum_k [k Omega sigma_kk + g f_k (a + a+)(sigma_k,k+1 + h.c.)]`.
pub fn h0_dicke_kerr(p: &DickeKerrParams, fock: &FockSpace, dicke: &DickeSpace) -> Result<Operator> {
    p.validate()?;
    match (p.atoms, dicke.n_qubits()) {
        (Atoms::Qubits(n), Some(m)) if n == m => {}
        (Atoms::Oscillator, None) => {}
        _ => return Err(Error::BasisMismatch("Dicke space does not match the atom count".into())),
    }
    let detuning = (p.omega - p.capital_omega()).abs();
    let strain = p.g * dicke.lowering_element(dicke.k_max().saturating_sub(1)) * (fock.n_max() as f64).sqrt();
    if strain > 0.5 * detuning {
        warn!(
            "dispersive regime strained: g f_kmax sqrt(n_max) = {strain:.3} vs |omega - Omega| = {detuning:.3}"
        );
    }

    let id_fock = Operator::identity(Basis::Fock(*fock));
    let id_dicke = Operator::identity(Basis::Dicke(*dicke));
    let a = annihilation(fock);
    let n = number_power(fock, 1)?;
    let n2 = number_power(fock, 2)?;
    let field = n
        .scaled(C64::new(p.omega, 0.0))
        .add_scaled(&n2, C64::new(p.alpha, 0.0))?;
    let quadrature = a.add_scaled(&a.dagger(), C64::new(1.0, 0.0))?;

    let (lower, sz) = collective_sigma(dicke)?;
    let offset = dicke.n_qubits().unwrap_or(0) as f64;
    // k Omega = (Omega / 2)(sz + N): the constant -N Omega / 2 of sum sigma_z is dropped
    let excitations = sz.add_scaled(&id_dicke, C64::new(offset, 0.0))?.scaled(C64::new(0.5, 0.0));
    let atomic = excitations.scaled(C64::new(p.capital_omega(), 0.0));
    let dipole = lower.add_scaled(&lower.dagger(), C64::new(1.0, 0.0))?;

    let mut m: DMatrix<C64> = tensor(&id_dicke, &field)?.into_matrix();
    m += tensor(&atomic, &id_fock)?.matrix();
    m += tensor(&dipole, &quadrature)?.matrix() * C64::new(p.g, 0.0);
    Operator::new(m, Basis::Product(*dicke, *fock), true)
}

/// `H(t) = H0 + eps sin(eta t) n^k` for the Dicke-Kerr model with `H0` cached.
#[derive(Debug, Clone)]
pub struct DickeKerrModel {
    pub params: DickeKerrParams,
    pub fock: FockSpace,
    pub dicke: DickeSpace,
    h0: Operator,
    drive: Operator,
}

impl DickeKerrModel {
    pub fn new(params: DickeKerrParams, fock: FockSpace, dicke: DickeSpace) -> Result<Self> {
        let h0 = h0_dicke_kerr(&params, &fock, &dicke)?;
        let drive = drive_operator(h0.basis(), params.k)?;
        Ok(Self { params, fock, dicke, h0, drive })
    }

    pub fn h0(&self) -> &Operator {
        &self.h0
    }

    pub fn drive(&self) -> &Operator {
        &self.drive
    }

    pub fn h_full(&self, t: f64) -> Operator {
        let s = self.params.eps * (self.params.eta * t).sin();
        Operator::from_parts(self.h0.matrix() + self.drive.matrix() * C64::new(s, 0.0), self.h0.basis(), true)
    }

    pub fn driven(&self) -> DrivenHamiltonian {
        let p = &self.params;
        DrivenHamiltonian {
            static_part: self.h0.clone(),
            drives: vec![Drive {
                operator: self.drive.clone(),
                modulation: Modulation::Sine { amplitude: p.eps, frequency: p.eta },
            }],
            // counter-rotating sum frequency of a two-photon pair transition
            fast_frequency: p.eta.max(2.0 * p.omega + p.eta),
        }
    }
}

/// `S = i(a+^2 - a^2)`, Hermitian.
pub fn squeeze_operator(fock: &FockSpace) -> Operator {
    let a = annihilation(fock);
    let a2 = a.matrix() * a.matrix();
    let ad2 = a2.adjoint();
    Operator::from_parts((ad2 - a2) * C64::new(0.0, 1.0), Basis::Fock(*fock), true)
}

/// Lab-frame modulated cavity with the nonlinearity drive:
/// `omega(t) n + i[omega'/(4 omega)](a+^2 - a^2) + eps sin(eta t) n^k`.
pub fn h_lab_modcav(p: &ModCavityParams, t: f64, fock: &FockSpace) -> Result<Operator> {
    Ok(modcav_lab_driven(p, fock)?.at(t))
}

/// Effective interaction-picture Hamiltonian `zeta n + i chi (a+^2 - a^2)`.
pub fn h_eff_modcav(p: &ModCavityParams, fock: &FockSpace) -> Result<Operator> {
    p.validate()?;
    let (zeta, chi) = (p.zeta(), p.chi());
    if chi * fock.n_max() as f64 >= 0.5 * zeta.abs() {
        warn!("perturbative regime strained: chi n_max = {:.3e} vs |zeta| = {:.3e}", chi * fock.n_max() as f64, zeta.abs());
    }
    let n = number_power(fock, 1)?;
    n.scaled(C64::new(zeta, 0.0)).add_scaled(&squeeze_operator(fock), C64::new(chi, 0.0))
}

/// Lab frame split as static `omega0 n` plus three modulated terms.
pub fn modcav_lab_driven(p: &ModCavityParams, fock: &FockSpace) -> Result<DrivenHamiltonian> {
    p.validate()?;
    let n = number_power(fock, 1)?;
    let drives = vec![
        Drive {
            operator: n.clone(),
            modulation: Modulation::Sine { amplitude: p.eps_w, frequency: p.omega1 },
        },
        Drive {
            operator: squeeze_operator(fock),
            modulation: Modulation::WallSqueeze { omega0: p.omega0, eps_w: p.eps_w, omega1: p.omega1 },
        },
        Drive {
            operator: number_power(fock, p.k)?,
            modulation: Modulation::Sine { amplitude: p.eps, frequency: p.eta },
        },
    ];
    let fast = p.eta.max(p.omega1).max(2.0 * p.omega0 + p.eta);
    DrivenHamiltonian::new(n.scaled(C64::new(p.omega0, 0.0)), drives, fast)
}

/// Effective frame plus the unchanged `eps sin(eta t) n^k` drive (it commutes
/// with the `exp(-i X(t) n)` transformation).
pub fn modcav_eff_driven(p: &ModCavityParams, fock: &FockSpace) -> Result<DrivenHamiltonian> {
    let h = h_eff_modcav(p, fock)?;
    let drives = vec![Drive {
        operator: number_power(fock, p.k)?,
        modulation: Modulation::Sine { amplitude: p.eps, frequency: p.eta },
    }];
    let fast = p.eta.max(2.0 * p.zeta().abs() + p.eta);
    DrivenHamiltonian::new(h, drives, fast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::max_abs;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn fig2_params() -> DickeKerrParams {
        DickeKerrParams {
            omega: 1.0,
            nu: 0.21,
            g: 0.07,
            alpha: 1e-5,
            atoms: Atoms::Qubits(1),
            k: 2,
            eps: 1e-2,
            eta: 2.0043,
        }
    }

    fn eigenvalues(op: &Operator) -> Vec<f64> {
        let mut v: Vec<f64> = op.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn decoupled_spectrum() {
        let p = DickeKerrParams { g: 0.0, alpha: 0.0, atoms: Atoms::Qubits(2), ..fig2_params() };
        let fock = FockSpace::new(5).unwrap();
        let h = h0_dicke_kerr(&p, &fock, &DickeSpace::full(2)).unwrap();
        let mut expected: Vec<f64> =
            (0..=2).flat_map(|k| (0..=5).map(move |n| n as f64 + 0.21 * k as f64)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eigenvalues(&h).iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn counter_rotating_terms_lower_the_vacuum() {
        let p = DickeKerrParams { alpha: 0.0, ..fig2_params() };
        let h = h0_dicke_kerr(&p, &FockSpace::new(12).unwrap(), &DickeSpace::full(1)).unwrap();
        let ground = eigenvalues(&h)[0];
        assert!(ground < 0.0, "ground energy {ground}");
        // second-order shift -g^2/(omega + Omega)
        assert_abs_diff_eq!(ground, -0.0049 / 1.21, epsilon = 2e-5);
    }

    #[test]
    fn oscillator_limit_is_approached() {
        let g_ho = 0.07;
        let fock = FockSpace::new(10).unwrap();
        let osc = DickeKerrParams { atoms: Atoms::Oscillator, g: g_ho, alpha: 0.0, ..fig2_params() };
        let reference = eigenvalues(&h0_dicke_kerr(&osc, &fock, &DickeSpace::oscillator(4)).unwrap());
        let mut last = f64::INFINITY;
        for n in [4usize, 16, 64] {
            let p = DickeKerrParams {
                atoms: Atoms::Qubits(n),
                g: g_ho / (n as f64).sqrt(),
                alpha: 0.0,
                ..fig2_params()
            };
            let ev = eigenvalues(&h0_dicke_kerr(&p, &fock, &DickeSpace::qubits(n, 4).unwrap()).unwrap());
            let dist = (0..=4).map(|i| (ev[i] - reference[i]).powi(2)).sum::<f64>().sqrt();
            assert!(dist < last, "N = {n}: {dist} !< {last}");
            last = dist;
        }
    }

    #[test]
    fn full_hamiltonian_time_dependence() {
        let model = DickeKerrModel::new(fig2_params(), FockSpace::new(6).unwrap(), DickeSpace::full(1)).unwrap();
        assert_eq!(model.h_full(0.0).matrix(), model.h0().matrix());
        let peak = model.h_full(PI / (2.0 * 2.0043));
        let expected = model.h0().matrix() + model.drive().matrix() * C64::new(1e-2, 0.0);
        assert!(max_abs(&(peak.matrix() - expected)) < 1e-15);
        let t = 12.345;
        let later = model.h_full(t + 2.0 * PI / 2.0043);
        assert!(max_abs(&(later.matrix() - model.h_full(t).matrix())) < 1e-12);
        // driven form agrees with the direct evaluation
        assert!(max_abs(&(model.driven().at(t).matrix() - model.h_full(t).matrix())) < 1e-15);
    }

    fn fig5a() -> ModCavityParams {
        ModCavityParams { omega0: 1.0, omega1: 5.0, eps_w: 1e-2, k: 2, eps: 1e-3, eta: 3.0 }
    }

    #[test]
    fn modcav_derived_symbols() {
        let p = fig5a();
        assert_abs_diff_eq!(p.zeta(), -1.5);
        assert_abs_diff_eq!(p.chi(), 6.25e-3, epsilon = 1e-18);
        let b = ModCavityParams { omega1: 0.7, ..p };
        assert_abs_diff_eq!(b.zeta(), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn modcav_validation() {
        assert!(ModCavityParams { omega1: 2.0, ..fig5a() }.validate().is_err());
        assert!(ModCavityParams { eps_w: 0.2, ..fig5a() }.validate().is_err());
        assert!(ModCavityParams { eta: 0.0, ..fig5a() }.validate().is_err());
    }

    #[test]
    fn lab_frame_static_limit_and_squeeze_peak() {
        let fock = FockSpace::new(8).unwrap();
        let p = ModCavityParams { eps_w: 0.0, ..fig5a() };
        let t = 0.77;
        let h = h_lab_modcav(&p, t, &fock).unwrap();
        for n in 0..=8 {
            let expected = n as f64 + 1e-3 * (3.0 * t).sin() * (n * n) as f64;
            assert_abs_diff_eq!(h.matrix()[(n, n)].re, expected, epsilon = 1e-14);
        }
        assert_eq!(h.matrix().iter().filter(|z| z.norm() > 0.0).count(), 8);

        let q = fig5a();
        assert_abs_diff_eq!(q.squeeze_coefficient(0.0), 1e-2 * 5.0 / 4.0, epsilon = 1e-16);
        let h0 = h_lab_modcav(&q, 0.0, &fock).unwrap();
        // <2|H|0> = i * coeff * sqrt(2)
        assert_abs_diff_eq!(h0.matrix()[(2, 0)].im, 0.0125 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn squeeze_operator_is_hermitian() {
        let s = squeeze_operator(&FockSpace::new(10).unwrap());
        let (defect, _) = s.hermiticity_defect();
        assert_eq!(defect, 0.0);
        assert!(Operator::new(s.matrix().clone(), s.basis(), true).is_ok());
    }

    #[test]
    fn lab_frame_periodic_in_each_phase() {
        let fock = FockSpace::new(6).unwrap();
        let p = ModCavityParams { eta: 3.0, omega1: 5.0, ..fig5a() };
        let h = modcav_lab_driven(&p, &fock).unwrap();
        let t = 3.3;
        // shift by the common period 2 pi (eta = 3, omega1 = 5 are integers)
        let d = max_abs(&(h.at(t + 2.0 * PI).matrix() - h.at(t).matrix()));
        assert!(d < 1e-12);
    }

    #[test]
    fn effective_hamiltonian_zero_chi() {
        let fock = FockSpace::new(6).unwrap();
        let p = ModCavityParams { eps_w: 0.0, ..fig5a() };
        let ev = eigenvalues(&h_eff_modcav(&p, &fock).unwrap());
        let mut expected: Vec<f64> = (0..=6).map(|n| -1.5 * n as f64).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        let mods = [
            Modulation::Sine { amplitude: 0.3, frequency: 2.1 },
            Modulation::WallSqueeze { omega0: 1.0, eps_w: 0.01, omega1: 5.0 },
        ];
        for m in mods {
            let (a, b) = (0.2, 1.9);
            let steps = 20_000;
            let h = (b - a) / steps as f64;
            // Simpson
            let mut s = m.value(a) + m.value(b);
            for i in 1..steps {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * m.value(a + i as f64 * h);
            }
            let integral = s * h / 3.0;
            assert_abs_diff_eq!(integral, m.antiderivative(b) - m.antiderivative(a), epsilon = 1e-12);
        }
    }
}

//! Exact diagonalization of static Hamiltonians, dressed-state bookkeeping,
//! the modulation matrix elements `Q_mn` and `R_mn`, the photon-ladder gaps
//! and rate ratios, and the numerical resonance search.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{evolve_full, IntegratorConfig};
use crate::error::{Error, Result};
use crate::hilbert::{max_abs, Basis, Operator, StateVector, C64};
use crate::models::{drive_operator, DrivenHamiltonian};

/// Overlap difference below which a max-overlap label is a tie.
pub const LABEL_TIE_TOL: f64 = 1e-3;

/// Dominant bare state of a dressed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareLabel {
    pub atoms: usize,
    pub photons: usize,
    /// `|<bare|phi>|^2` of the dominant component.
    pub weight: f64,
    /// Runner-up weight.
    pub runner_up: f64,
}

impl BareLabel {
    pub fn is_ambiguous(&self) -> bool {
        self.weight - self.runner_up < LABEL_TIE_TOL
    }
}

#[derive(Debug, Clone)]
pub struct DressedSpectrum {
    lambdas: DVector<f64>,
    /// Columns are the dressed states.
    states: DMatrix<C64>,
    xi: DVector<f64>,
    labels: Vec<BareLabel>,
    k: u32,
    basis: Basis,
    norm: f64,
    near_degenerate: Vec<(usize, usize)>,
}

/// Diagonalizes `h0`, sorts ascending, fixes the eigenvector phases (largest
/// component real positive) and evaluates `xi_n = <phi_n|n^k|phi_n>`.
pub fn diagonalize(h0: &Operator, k: u32) -> Result<DressedSpectrum> {
    if !h0.is_hermitian() {
        return Err(Error::invalid("h0", "diagonalize needs a Hermitian operator"));
    }
    let dim = h0.dim();
    let (lambdas, states) = eigen_decompose(h0)?;

    let norm = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(f64::MIN_POSITIVE);
    check_decomposition(h0.matrix(), &lambdas, &states, norm)?;

    let near_degenerate: Vec<(usize, usize)> = (1..dim)
        .filter(|&i| lambdas[i] - lambdas[i - 1] < 1e-12 * norm)
        .map(|i| (i - 1, i))
        .collect();
    if !near_degenerate.is_empty() {
        warn!("{} near-degenerate dressed pairs; their phases are arbitrary", near_degenerate.len());
    }

    let basis = h0.basis();
    let drive = drive_operator_for(basis, k)?;
    let diag = drive.matrix().diagonal();
    let xi = DVector::from_iterator(
        dim,
        (0..dim).map(|n| {
            states.column(n).iter().zip(diag.iter()).map(|(c, d)| c.norm_sqr() * d.re).sum::<f64>()
        }),
    );
    let labels = (0..dim).map(|n| label_of(basis, &states.column(n).into_owned())).collect();

    Ok(DressedSpectrum { lambdas, states, xi, labels, k, basis, norm, near_degenerate })
}

/// Ascending eigenvalues and phase-fixed eigenvectors (columns) of a
/// Hermitian operator.
pub(crate) fn eigen_decompose(h: &Operator) -> Result<(DVector<f64>, DMatrix<C64>)> {
    let dim = h.dim();
    let eig = h
        .matrix()
        .clone()
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or_else(|| Error::Eigensolver("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambdas = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut states = DMatrix::zeros(dim, dim);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        states.set_column(col, &(v * phase));
    }
    Ok((lambdas, states))
}

fn drive_operator_for(basis: Basis, k: u32) -> Result<Operator> {
    match basis {
        Basis::Dicke(_) => Err(Error::BasisMismatch("spectrum needs a Fock factor".into())),
        _ => drive_operator(basis, k),
    }
}

fn check_decomposition(h: &DMatrix<C64>, lambdas: &DVector<f64>, states: &DMatrix<C64>, norm: f64) -> Result<()> {
    let hv = h * states;
    for n in 0..lambdas.len() {
        let r = (hv.column(n) - states.column(n) * C64::new(lambdas[n], 0.0)).norm();
        if r > 1e-10 * norm {
            return Err(Error::Eigensolver(format!("residual {r:e} for eigenpair {n}")));
        }
    }
    let dim = lambdas.len();
    let gram = states.adjoint() * states;
    let defect = max_abs(&(gram - DMatrix::<C64>::identity(dim, dim)));
    if defect > 1e-10 {
        return Err(Error::Eigensolver(format!("eigenvectors not unitary: defect {defect:e}")));
    }
    Ok(())
}

fn label_of(basis: Basis, v: &DVector<C64>) -> BareLabel {
    let (mut best, mut second, mut best_idx) = (0.0f64, 0.0f64, 0usize);
    for (i, c) in v.iter().enumerate() {
        let w = c.norm_sqr();
        if w > best {
            second = best;
            best = w;
            best_idx = i;
        } else if w > second {
            second = w;
        }
    }
    let (atoms, photons) = basis.split(best_idx);
    BareLabel { atoms, photons, weight: best, runner_up: second }
}

impl DressedSpectrum {
    pub fn lambdas(&self) -> &DVector<f64> {
        &self.lambdas
    }

    pub fn states(&self) -> &DMatrix<C64> {
        &self.states
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    pub fn labels(&self) -> &[BareLabel] {
        &self.labels
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Spectral norm of `H0` (largest `|lambda|`).
    pub fn h_norm(&self) -> f64 {
        self.norm
    }

    pub fn near_degenerate(&self) -> &[(usize, usize)] {
        &self.near_degenerate
    }

    pub fn state(&self, n: usize) -> StateVector {
        StateVector::unchecked(self.states.column(n).into_owned(), self.basis)
    }

    /// `Phi^dagger A Phi`: the operator in the dressed basis.
    pub fn transform(&self, op: &Operator) -> Result<DMatrix<C64>> {
        if op.basis() != self.basis {
            return Err(Error::BasisMismatch("operator and spectrum differ in basis".into()));
        }
        Ok(self.states.adjoint() * op.matrix() * &self.states)
    }

    /// Dressed amplitudes `<phi_n|psi>`.
    pub fn to_dressed(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.states.adjoint() * psi
    }

    pub fn from_dressed(&self, c: &DVector<C64>) -> DVector<C64> {
        &self.states * c
    }

    /// The dressed index of `|0 atoms, n photons>` for each `n < levels`.
    pub fn ladder(&self, levels: usize) -> Result<Vec<usize>> {
        (0..levels).map(|n| self.ladder_index(n)).collect()
    }

    fn ladder_index(&self, photons: usize) -> Result<usize> {
        let mut found = None;
        for (i, l) in self.labels.iter().enumerate() {
            if l.atoms == 0 && l.photons == photons {
                if l.is_ambiguous() {
                    return Err(Error::AmbiguousLabel { index: i, best: l.weight, second: l.runner_up });
                }
                if let Some(prev) = found {
                    let other: &BareLabel = &self.labels[prev];
                    return Err(Error::AmbiguousLabel { index: i, best: l.weight, second: other.weight });
                }
                found = Some(i);
            }
        }
        found.ok_or(Error::LadderIncomplete { photons })
    }

    /// Longest contiguous run of unambiguous ladder states from the vacuum.
    pub fn ladder_auto(&self) -> Vec<usize> {
        let mut out = Vec::new();
        while let Ok(i) = self.ladder_index(out.len()) {
            out.push(i);
        }
        out
    }

    /// Eigenvalue `index` refined by a Rayleigh quotient evaluated in
    /// double-double arithmetic; returns `(hi, lo)`.
    pub fn refined_eigenvalue(&self, h0: &Operator, index: usize) -> (f64, f64) {
        self.refined_expectation(h0, index)
    }

    /// `<phi_index|op|phi_index>` in double-double arithmetic, `(hi, lo)`.
    pub fn refined_expectation(&self, op: &Operator, index: usize) -> (f64, f64) {
        rayleigh_dd(op.matrix(), &self.states.column(index).into_owned())
    }
}

/// `Q_mn = (eps/eta)(xi_n - xi_m)` and `R_mn = (eps/2)<phi_m|drive|phi_n>`.
pub fn modulation_elements(
    spec: &DressedSpectrum,
    drive: &Operator,
    eps: f64,
    eta: f64,
) -> Result<(DMatrix<f64>, DMatrix<C64>)> {
    let dim = spec.dim();
    let xi = spec.xi();
    let q = DMatrix::from_fn(dim, dim, |m, n| (eps / eta) * (xi[n] - xi[m]));
    let mut r = spec.transform(drive)? * C64::new(0.5 * eps, 0.0);
    // enforce exact Hermitian symmetry of the stored table
    for m in 0..dim {
        r[(m, m)] = C64::new(r[(m, m)].re, 0.0);
        for n in (m + 1)..dim {
            let avg = 0.5 * (r[(m, n)] + r[(n, m)].conj());
            r[(m, n)] = avg;
            r[(n, m)] = avg.conj();
        }
    }
    Ok((q, r))
}

/// `eta_n = lambda_{n+2} - lambda_n` along the photon ladder.
pub fn gaps(spec: &DressedSpectrum) -> Result<Vec<f64>> {
    let ladder = spec.ladder_auto();
    if ladder.len() < 3 {
        // surface the precise reason
        spec.ladder(3)?;
    }
    Ok(ladder_gaps(spec, &ladder))
}

/// First `count` ladder gaps; fails if the ladder is shorter than `count + 2`.
pub fn gaps_upto(spec: &DressedSpectrum, count: usize) -> Result<Vec<f64>> {
    let ladder = spec.ladder(count + 2)?;
    Ok(ladder_gaps(spec, &ladder))
}

fn ladder_gaps(spec: &DressedSpectrum, ladder: &[usize]) -> Vec<f64> {
    ladder.windows(3).map(|w| spec.lambdas()[w[2]] - spec.lambdas()[w[0]]).collect()
}

/// `<phi_{L_n}|drive|phi_{L_{n+2}}>` along the photon ladder.
pub fn ladder_element(spec: &DressedSpectrum, drive: &Operator, n: usize) -> Result<C64> {
    let ladder = spec.ladder(n + 3)?;
    let (i, j) = (ladder[n], ladder[n + 2]);
    let d = drive.matrix();
    let (vi, vj) = (spec.states().column(i), spec.states().column(j));
    Ok(vi.dotc(&(d * vj)))
}

/// `r_n = R_{n,n+2} / R_{0,2}`.
pub fn rate_ratio(spec: &DressedSpectrum, drive: &Operator, n: usize) -> Result<f64> {
    let r0 = ladder_element(spec, drive, 0)?;
    if r0.norm() < 1e-14 {
        return Err(Error::ZeroReference { value: r0.norm() });
    }
    let rn = ladder_element(spec, drive, n)?;
    Ok((rn / r0).re)
}

/// Standard-DCE reference `sqrt((n+1)(n+2)/2)`.
pub fn dce_reference_ratio(n: usize) -> f64 {
    (((n + 1) * (n + 2)) as f64 / 2.0).sqrt()
}

/// Inputs of a numerical resonance search.
pub struct ResonanceSearch<'a> {
    /// Builds the driven Hamiltonian for a trial modulation frequency.
    pub build: &'a (dyn Fn(f64) -> Result<DrivenHamiltonian> + Sync),
    pub psi0: StateVector,
    pub probe_horizon: f64,
    pub dt: f64,
    /// Uniform probes across the bracket before golden-section refinement.
    pub coarse_points: usize,
    /// Width of the final bracket.
    pub tolerance: f64,
}

impl<'a> ResonanceSearch<'a> {
    pub fn new(build: &'a (dyn Fn(f64) -> Result<DrivenHamiltonian> + Sync), psi0: StateVector, dt: f64) -> Self {
        Self { build, psi0, probe_horizon: 2e4, dt, coarse_points: 17, tolerance: 2e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct ResonanceReport {
    pub eta_star: f64,
    pub peak_mean_n: f64,
    pub probe_horizon: f64,
    /// Every probe `(eta, max <n> up to the horizon)` in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

/// Locates the modulation frequency that maximizes photon growth: a parallel
/// coarse scan picks the best cell, then golden-section search refines it.
/// The figure of merit is the largest `<n>` reached within the probe horizon,
/// which is unimodal in the detuning where `<n>(T)` alone has side lobes.
pub fn find_resonance(search: &ResonanceSearch<'_>, bracket: (f64, f64)) -> Result<ResonanceReport> {
    let (lo, hi) = bracket;
    if !(lo < hi) || !(lo > 0.0) {
        return Err(Error::invalid("bracket", format!("empty or non-positive bracket [{lo}, {hi}]")));
    }
    let probe = |eta: f64| -> Result<f64> {
        let h = (search.build)(eta)?;
        let stride = ((search.probe_horizon / search.dt) / 400.0).ceil().max(1.0) as usize;
        let cfg = IntegratorConfig::new(search.dt, search.probe_horizon).with_stride(stride);
        let traj = evolve_full(&h, &search.psi0, &cfg)?;
        Ok(traj.samples.iter().map(|s| s.mean_n).fold(0.0, f64::max))
    };

    let points = search.coarse_points.max(3);
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let coarse: Vec<f64> = grid.par_iter().map(|&e| probe(e)).collect::<Result<_>>()?;
    let mut probes: Vec<(f64, f64)> = grid.iter().copied().zip(coarse.iter().copied()).collect();

    let (best, &best_val) = coarse.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let min_val = coarse.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if min_val > 0.0 { best_val / min_val } else if best_val > 1e-14 { f64::INFINITY } else { 1.0 };
    if ratio < 1.5 {
        return Err(Error::NoResonance { lo, hi, ratio });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(points - 1)];
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (probe(x1)?, probe(x2)?);
    probes.push((x1, f1));
    probes.push((x2, f2));
    while b - a > search.tolerance {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = probe(x2)?;
            probes.push((x2, f2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = probe(x1)?;
            probes.push((x1, f1));
        }
    }
    let (eta_star, peak) = probes
        .iter()
        .copied()
        .filter(|(e, _)| *e >= a && *e <= b)
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap_or(((a + b) / 2.0, f1.max(f2)));

    Ok(ResonanceReport { eta_star, peak_mean_n: peak, probe_horizon: search.probe_horizon, probes })
}

// --- double-double Rayleigh quotient -------------------------------------

#[derive(Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn add_f64(self, x: f64) -> Dd {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = two_sum(s, e + self.lo);
        Dd { hi, lo }
    }

    fn add_prod(self, a: f64, b: f64) -> Dd {
        let (p, e) = two_prod(a, b);
        self.add_f64(p).add_f64(e)
    }

    fn add(self, o: Dd) -> Dd {
        self.add_f64(o.hi).add_f64(o.lo)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

fn dd_div(a: Dd, b: Dd) -> (f64, f64) {
    let q1 = a.hi / b.hi;
    // r = a - q1 * b
    let r = a.add(Dd::default().add_prod(-q1, b.hi).add_prod(-q1, b.lo));
    let q2 = r.to_f64() / b.hi;
    let (hi, lo) = two_sum(q1, q2);
    (hi, lo)
}

fn rayleigh_dd(h: &DMatrix<C64>, v: &DVector<C64>) -> (f64, f64) {
    let dim = v.len();
    let mut num = Dd::default();
    let mut den = Dd::default();
    for i in 0..dim {
        let (mut wr, mut wi) = (Dd::default(), Dd::default());
        for j in 0..dim {
            let hij = h[(i, j)];
            if hij.re == 0.0 && hij.im == 0.0 {
                continue;
            }
            let vj = v[j];
            wr = wr.add_prod(hij.re, vj.re).add_prod(-hij.im, vj.im);
            wi = wi.add_prod(hij.re, vj.im).add_prod(hij.im, vj.re);
        }
        let vi = v[i];
        // Re(conj(v_i) w_i)
        num = num
            .add_prod(vi.re, wr.hi)
            .add_f64(vi.re * wr.lo)
            .add_prod(vi.im, wi.hi)
            .add_f64(vi.im * wi.lo);
        den = den.add_prod(vi.re, vi.re).add_prod(vi.im, vi.im);
    }
    dd_div(num, den)
}

//! Time evolution with fixed-step fourth-order Runge-Kutta.
//!
//! [`evolve_full`] solves the Schrodinger equation of a [`DrivenHamiltonian`]
//! exactly (up to the step error) in the dressed frame of its static part:
//! with `|psi> = sum_n exp(-i theta_n(t)) c_n |phi_n>` and
//! `theta_n = lambda_n t + sum_j F_j(t) <phi_n|D_j|phi_n>` (`F_j` an
//! antiderivative of the drive coefficient), the amplitudes obey
//!
//! ```text
//! i dc_m/dt = sum_j f_j(t) sum_{n != m} <phi_m|D_j|phi_n> exp[i(theta_m - theta_n)] c_n
//! ```
//!
//! For the single `eps sin(eta t) n^k` drive this is the exact amplitude
//! equation with `Q_mn cos(eta t) - t lambda_nm` phases. The free rotation and
//! the diagonal drive are integrated analytically, so the step size is set by
//! the drive frequencies rather than by the largest eigenvalue.
//!
//! [`evolve_bare`] integrates `i dpsi/dt = H(t) psi` directly and serves as an
//! independent reference on short horizons. [`evolve_rwa`] and
//! [`evolve_bessel`] implement the reduced amplitude equations.

use std::f64::consts::TAU;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{Basis, StateVector, C64};
use crate::models::{DrivenHamiltonian, Modulation};
use crate::observables::{photon_statistics_at, ObservableSample};
use crate::spectra::{eigen_decompose, DressedSpectrum};
use crate::special::bessel_ratio;

/// Entries of a dressed-frame coupling below this fraction of its largest
/// entry are dropped.
const PRUNE_TOL: f64 = 1e-15;

/// Minimum number of steps per period of the fastest frequency.
pub const STEPS_PER_PERIOD: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between recorded samples.
    pub sample_stride: usize,
    /// Norm-drift budget per sample; a sample whose drift increment exceeds
    /// 100 times this aborts the run.
    pub renorm_tolerance: f64,
    /// Renormalize at every sample. Off by default so that step-size errors
    /// stay visible.
    pub renormalize: bool,
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        let steps = (t_end / dt).round().max(1.0) as usize;
        Self {
            dt,
            t_end,
            sample_stride: (steps / 2000).max(1),
            renorm_tolerance: 1e-9,
            renormalize: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride.max(1);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.renorm_tolerance = tol;
        self
    }

    /// Largest admissible step for a fast frequency.
    pub fn max_dt(fast_frequency: f64) -> f64 {
        TAU / fast_frequency / STEPS_PER_PERIOD
    }

    pub fn validate(&self, fast_frequency: f64) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::invalid("dt", format!("need dt > 0 and t_end >= 0, got {} / {}", self.dt, self.t_end)));
        }
        let limit = Self::max_dt(fast_frequency);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, limit, fast_frequency });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<ObservableSample>,
    pub final_state: StateVector,
    /// Dressed-frame amplitudes at `t_end`, when the integrator works with them.
    pub final_amplitudes: Option<DVector<C64>>,
    pub dt: f64,
    pub steps: usize,
    pub max_norm_drift: f64,
}

impl TrajectoryRecord {
    pub fn final_norm_drift(&self) -> f64 {
        (self.final_state.norm_sqr() - 1.0).abs()
    }
}

/// Amplitudes `c_n(t)` of the dressed-state expansion.
#[derive(Debug, Clone)]
pub struct AmplitudeState {
    pub c: DVector<C64>,
}

impl AmplitudeState {
    pub fn ground(dim: usize) -> Self {
        let mut c = DVector::zeros(dim);
        c[0] = C64::new(1.0, 0.0);
        Self { c }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.norm_squared()
    }
}

/// Drive amplitude and frequency of `eps sin(eta t) n^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    pub eps: f64,
    pub eta: f64,
}

/// Sparse off-diagonal coupling, row-major.
#[derive(Debug, Clone)]
struct Coupling {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Coupling {
    fn from_dense(m: &DMatrix<C64>, skip_diagonal: bool) -> Self {
        let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let cut = PRUNE_TOL * scale;
        let mut row_start = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if skip_diagonal && i == j {
                    continue;
                }
                let z = m[(i, j)];
                if z.norm() > cut {
                    cols.push(j);
                    vals.push(z);
                }
            }
            row_start.push(cols.len());
        }
        Self { row_start, cols, vals }
    }

    fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// `out += scale * M u`.
    fn apply_add(&self, u: &[C64], scale: f64, out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[p] * u[self.cols[p]];
            }
            *o += acc * scale;
        }
    }
}

struct FrameDrive {
    modulation: Modulation,
    diagonal: Option<DVector<f64>>,
    off_diagonal: Coupling,
}

/// Dressed frame of a driven Hamiltonian: eigenbasis of the static part and
/// the drives transformed into it.
struct DressedFrame {
    lambdas: DVector<f64>,
    states: DMatrix<C64>,
    drives: Vec<FrameDrive>,
    basis: Basis,
}

impl DressedFrame {
    fn new(h: &DrivenHamiltonian) -> Result<Self> {
        let (lambdas, states) = eigen_decompose(h.static_part())?;
        let drives = h
            .drives()
            .iter()
            .map(|d| {
                let m = states.adjoint() * d.operator.matrix() * &states;
                let diag = DVector::from_iterator(m.nrows(), m.diagonal().iter().map(|z| z.re));
                let has_diag = diag.iter().any(|x| *x != 0.0);
                FrameDrive {
                    modulation: d.modulation,
                    diagonal: has_diag.then_some(diag),
                    off_diagonal: Coupling::from_dense(&m, true),
                }
            })
            .collect();
        Ok(Self { lambdas, states, drives, basis: h.basis() })
    }

    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn phases(&self, t: f64, out: &mut [C64]) {
        for (n, o) in out.iter_mut().enumerate() {
            let mut theta = self.lambdas[n] * t;
            for d in &self.drives {
                if let Some(diag) = &d.diagonal {
                    theta += d.modulation.antiderivative(t) * diag[n];
                }
            }
            // exp(-i theta)
            *o = C64::from_polar(1.0, -theta);
        }
    }

    fn to_bare(&self, c: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut w = vec![C64::new(0.0, 0.0); self.dim()];
        self.phases(t, &mut w);
        let u = DVector::from_iterator(self.dim(), c.iter().zip(&w).map(|(a, b)| a * b));
        &self.states * u
    }
}

struct FrameRhs<'a> {
    frame: &'a DressedFrame,
    // phase vectors at the two most recent times; an RK4 step revisits each
    // time at least twice
    cache: [(f64, Vec<C64>); 2],
    newest: usize,
    u: Vec<C64>,
    y: Vec<C64>,
}

impl<'a> FrameRhs<'a> {
    fn new(frame: &'a DressedFrame) -> Self {
        let n = frame.dim();
        let z = C64::new(0.0, 0.0);
        Self { frame, cache: [(f64::NAN, vec![z; n]), (f64::NAN, vec![z; n])], newest: 0, u: vec![z; n], y: vec![z; n] }
    }

    fn phases_at(&mut self, t: f64) -> usize {
        if let Some(i) = (0..2).find(|&i| self.cache[i].0 == t) {
            return i;
        }
        let slot = 1 - self.newest;
        self.frame.phases(t, &mut self.cache[slot].1);
        self.cache[slot].0 = t;
        self.newest = slot;
        slot
    }

    fn eval(&mut self, t: f64, c: &[C64], out: &mut [C64]) {
        let slot = self.phases_at(t);
        let w = &self.cache[slot].1;
        for ((u, c), w) in self.u.iter_mut().zip(c).zip(w) {
            *u = c * w;
        }
        self.y.iter_mut().for_each(|y| *y = C64::new(0.0, 0.0));
        for d in &self.frame.drives {
            if d.off_diagonal.is_empty() {
                continue;
            }
            let f = d.modulation.value(t);
            if f != 0.0 {
                d.off_diagonal.apply_add(&self.u, f, &mut self.y);
            }
        }
        // dc/dt = -i conj(w) y
        let w = &self.cache[slot].1;
        for ((o, y), w) in out.iter_mut().zip(&self.y).zip(w) {
            let z = w.conj() * y;
            *o = C64::new(z.im, -z.re);
        }
    }
}

/// Classical RK4 on a complex vector with a reusable workspace.
struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances `y` from `t` to `t_next`; the end time is passed explicitly
    /// so consecutive steps evaluate `f` at bit-identical times.
    fn step(&mut self, t: f64, t_next: f64, y: &mut [C64], mut f: impl FnMut(f64, &[C64], &mut [C64])) {
        let dt = t_next - t;
        let h = C64::new(dt, 0.0);
        let half = C64::new(0.5 * dt, 0.0);
        f(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        f(t + 0.5 * dt, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        f(t_next, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// Sampling and norm monitoring shared by all integrators.
struct Monitor {
    samples: Vec<ObservableSample>,
    last_norm_sqr: f64,
    max_drift: f64,
    abort_threshold: f64,
}

impl Monitor {
    fn new(cfg: &IntegratorConfig, norm_sqr: f64) -> Self {
        Self {
            samples: Vec::new(),
            last_norm_sqr: norm_sqr,
            max_drift: (norm_sqr - 1.0).abs(),
            abort_threshold: 100.0 * cfg.renorm_tolerance,
        }
    }

    fn check(&mut self, t: f64, norm_sqr: f64) -> Result<()> {
        let increment = (norm_sqr - self.last_norm_sqr).abs();
        self.max_drift = self.max_drift.max((norm_sqr - 1.0).abs());
        if !norm_sqr.is_finite() || increment > self.abort_threshold {
            return Err(Error::NormDrift { t, drift: increment, threshold: self.abort_threshold });
        }
        self.last_norm_sqr = norm_sqr;
        Ok(())
    }

    fn record(&mut self, psi: &StateVector, t: f64) {
        self.samples.push(photon_statistics_at(psi, t));
    }
}

/// Exact Schrodinger dynamics of `h` from `psi0` (see the module docs).
pub fn evolve_full(h: &DrivenHamiltonian, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<TrajectoryRecord> {
    cfg.validate(h.fast_frequency())?;
    if psi0.basis() != h.basis() {
        return Err(Error::BasisMismatch("initial state and Hamiltonian differ in basis".into()));
    }
    if (psi0.norm_sqr() - 1.0).abs() > crate::hilbert::NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr: psi0.norm_sqr() });
    }
    let frame = DressedFrame::new(h)?;
    let dim = frame.dim();
    // c(0) = exp(i theta(0)) Phi^dagger psi0
    let mut w0 = vec![C64::new(0.0, 0.0); dim];
    frame.phases(0.0, &mut w0);
    let proj = frame.states.adjoint() * psi0.amplitudes();
    let mut c: Vec<C64> = proj.iter().zip(&w0).map(|(p, w)| p * w.conj()).collect();

    let mut rhs = FrameRhs::new(&frame);
    let mut rk = Rk4::new(dim);
    let steps = cfg.steps();
    let mut monitor = Monitor::new(cfg, psi0.norm_sqr());
    let bare = |c: &[C64], t: f64| {
        StateVector::unchecked(frame.to_bare(&DVector::from_column_slice(c), t), frame.basis)
    };
    monitor.record(&bare(&c, 0.0), 0.0);
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        rk.step(t, (step + 1) as f64 * cfg.dt, &mut c, |t, y, out| rhs.eval(t, y, out));
        let done = step + 1;
        if done % cfg.sample_stride == 0 || done == steps {
            let t_now = done as f64 * cfg.dt;
            let norm_sqr: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            monitor.check(t_now, norm_sqr)?;
            if cfg.renormalize {
                let s = 1.0 / norm_sqr.sqrt();
                c.iter_mut().for_each(|z| *z *= s);
            }
            monitor.record(&bare(&c, t_now), t_now);
        }
    }
    let t_end = steps as f64 * cfg.dt;
    let final_state = bare(&c, t_end);
    Ok(TrajectoryRecord {
        samples: monitor.samples,
        final_state,
        final_amplitudes: Some(DVector::from_vec(c)),
        dt: cfg.dt,
        steps,
        max_norm_drift: monitor.max_drift,
    })
}

/// Direct RK4 integration of `i dpsi/dt = H(t) psi` in the bare basis.
///
/// The step must resolve the largest eigenvalue of `H`, so this is only
/// practical on short horizons; it is the reference route for
/// [`evolve_full`].
pub fn evolve_bare(h: &DrivenHamiltonian, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<TrajectoryRecord> {
    cfg.validate(h.fast_frequency())?;
    if psi0.basis() != h.basis() {
        return Err(Error::BasisMismatch("initial state and Hamiltonian differ in basis".into()));
    }
    let dim = psi0.amplitudes().len();
    let stat = Coupling::from_dense(h.static_part().matrix(), false);
    let drives: Vec<(Modulation, Coupling)> =
        h.drives().iter().map(|d| (d.modulation, Coupling::from_dense(d.operator.matrix(), false))).collect();
    let mut psi: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    let mut f = |t: f64, y: &[C64], out: &mut [C64]| {
        scratch.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        stat.apply_add(y, 1.0, &mut scratch);
        for (m, d) in &drives {
            let s = m.value(t);
            if s != 0.0 {
                d.apply_add(y, s, &mut scratch);
            }
        }
        for (o, z) in out.iter_mut().zip(&scratch) {
            *o = C64::new(z.im, -z.re);
        }
    };
    let mut rk = Rk4::new(dim);
    let steps = cfg.steps();
    let mut monitor = Monitor::new(cfg, psi0.norm_sqr());
    let basis = h.basis();
    monitor.record(psi0, 0.0);
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        rk.step(t, (step + 1) as f64 * cfg.dt, &mut psi, &mut f);
        let done = step + 1;
        if done % cfg.sample_stride == 0 || done == steps {
            let t_now = done as f64 * cfg.dt;
            let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            monitor.check(t_now, norm_sqr)?;
            if cfg.renormalize {
                let s = 1.0 / norm_sqr.sqrt();
                psi.iter_mut().for_each(|z| *z *= s);
            }
            monitor.record(&StateVector::unchecked(DVector::from_column_slice(&psi), basis), t_now);
        }
    }
    Ok(TrajectoryRecord {
        samples: monitor.samples,
        final_state: StateVector::unchecked(DVector::from_vec(psi), basis),
        final_amplitudes: None,
        dt: cfg.dt,
        steps,
        max_norm_drift: monitor.max_drift,
    })
}

/// Which pairs the reduced equation keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RwaTerms {
    /// Pairs with `| |lambda_nm| - eta | <= width`.
    Window(f64),
    /// Default window `10 max|R_mn|` over off-diagonal entries.
    DefaultWindow,
    /// Every pair.
    All,
}

/// One retained term `coeff * exp(i freq t) c_col` in the equation for `c_row`.
#[derive(Debug, Clone, Copy)]
struct PhasedTerm {
    row: usize,
    col: usize,
    coeff: C64,
    freq: f64,
}

fn integrate_amplitudes(
    spec: &DressedSpectrum,
    tone: DriveTone,
    c0: &AmplitudeState,
    cfg: &IntegratorConfig,
    fast_frequency: f64,
    mut rhs: impl FnMut(f64, &[C64], &mut [C64]),
) -> Result<TrajectoryRecord> {
    cfg.validate(fast_frequency)?;
    if c0.c.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: c0.c.len() });
    }
    let mut c: Vec<C64> = c0.c.iter().copied().collect();
    let mut rk = Rk4::new(c.len());
    let steps = cfg.steps();
    let mut monitor = Monitor::new(cfg, c0.norm_sqr());
    let bare = |c: &[C64], t: f64| {
        let amp = AmplitudeState { c: DVector::from_column_slice(c) };
        reconstruct_raw(&amp, spec, t, tone)
    };
    monitor.record(&bare(&c, 0.0), 0.0);
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        rk.step(t, (step + 1) as f64 * cfg.dt, &mut c, &mut rhs);
        let done = step + 1;
        if done % cfg.sample_stride == 0 || done == steps {
            let t_now = done as f64 * cfg.dt;
            let norm_sqr: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            monitor.check(t_now, norm_sqr)?;
            if cfg.renormalize {
                let s = 1.0 / norm_sqr.sqrt();
                c.iter_mut().for_each(|z| *z *= s);
            }
            monitor.record(&bare(&c, t_now), t_now);
        }
    }
    let t_end = steps as f64 * cfg.dt;
    Ok(TrajectoryRecord {
        samples: monitor.samples,
        final_state: bare(&c, t_end),
        final_amplitudes: Some(DVector::from_vec(c)),
        dt: cfg.dt,
        steps,
        max_norm_drift: monitor.max_drift,
    })
}

/// Reduced first-order resonance equations
/// `dc_m/dt = sum_{n != m} theta_mn R_mn c_n exp[i t theta_mn (|lambda_nm| - eta)]`
/// with `theta_mn = sign(lambda_m - lambda_n)`.
pub fn evolve_rwa(
    spec: &DressedSpectrum,
    r: &DMatrix<C64>,
    tone: DriveTone,
    c0: &AmplitudeState,
    cfg: &IntegratorConfig,
    terms: RwaTerms,
) -> Result<TrajectoryRecord> {
    let dim = spec.dim();
    let lam = spec.lambdas();
    let max_r = (0..dim)
        .flat_map(|m| (0..dim).filter(move |&n| n != m).map(move |n| (m, n)))
        .map(|(m, n)| r[(m, n)].norm())
        .fold(0.0, f64::max);
    let window = match terms {
        RwaTerms::Window(w) => Some(w),
        RwaTerms::DefaultWindow => Some(10.0 * max_r),
        RwaTerms::All => None,
    };
    let mut list = Vec::new();
    let mut worst_q = 0.0f64;
    for m in 0..dim {
        for n in 0..dim {
            if m == n || r[(m, n)].norm() <= PRUNE_TOL * max_r {
                continue;
            }
            let diff = lam[m] - lam[n];
            let theta = if diff > 0.0 { 1.0 } else if diff < 0.0 { -1.0 } else { 0.0 };
            if theta == 0.0 {
                continue;
            }
            let detuning = diff.abs() - tone.eta;
            if let Some(w) = window {
                if detuning.abs() > w {
                    continue;
                }
            }
            let q = (tone.eps / tone.eta) * (spec.xi()[n] - spec.xi()[m]);
            worst_q = worst_q.max(q.abs());
            list.push(PhasedTerm { row: m, col: n, coeff: r[(m, n)] * theta, freq: theta * detuning });
        }
    }
    if worst_q > 0.1 {
        warn!("|Q_mn| reaches {worst_q:.3} on retained pairs; the reduced equations are strained");
    }
    let fast = fast_of(&list, dim, 0.0);
    let rhs = move |t: f64, c: &[C64], out: &mut [C64]| {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for term in &list {
            out[term.row] += term.coeff * C64::from_polar(1.0, term.freq * t) * c[term.col];
        }
    };
    integrate_amplitudes(spec, tone, c0, cfg, fast, rhs)
}

fn fast_of(list: &[PhasedTerm], dim: usize, floor: f64) -> f64 {
    let max_freq = list.iter().map(|t| t.freq.abs()).fold(floor, f64::max);
    let mut row_sum = vec![0.0; dim];
    for t in list {
        row_sum[t.row] += t.coeff.norm();
    }
    let coupling = row_sum.iter().copied().fold(0.0, f64::max);
    max_freq.max(coupling).max(f64::MIN_POSITIVE)
}

/// Bessel-series form of the exact amplitude equations, truncated at `l_max`:
/// `dc_m/dt = -4 sum_{n != m} R_mn c_n e^{-i t lambda_nm}
///            sum_l l i^l J_l(Q_mn)/Q_mn sin(l eta t)`.
pub fn evolve_bessel(
    spec: &DressedSpectrum,
    q: &DMatrix<f64>,
    r: &DMatrix<C64>,
    tone: DriveTone,
    c0: &AmplitudeState,
    cfg: &IntegratorConfig,
    l_max: u32,
) -> Result<TrajectoryRecord> {
    if l_max < 1 {
        return Err(Error::invalid("l_max", "need at least the first harmonic"));
    }
    let dim = spec.dim();
    let lam = spec.lambdas().clone();
    let max_r = r.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    struct Term {
        row: usize,
        col: usize,
        // -4 R_mn l i^l J_l(Q)/Q = -2 R_mn i^l (2 l J_l(Q)/Q)
        harmonics: Vec<C64>,
    }
    let mut terms = Vec::new();
    let mut fast = tone.eta * l_max as f64;
    for m in 0..dim {
        for n in 0..dim {
            if m == n || r[(m, n)].norm() <= PRUNE_TOL * max_r {
                continue;
            }
            let harmonics = (1..=l_max)
                .map(|l| {
                    let il = C64::new(0.0, 1.0).powi(l as i32);
                    r[(m, n)] * il * (-2.0 * bessel_ratio(l, q[(m, n)]))
                })
                .collect();
            fast = fast.max((lam[n] - lam[m]).abs() + tone.eta * l_max as f64);
            terms.push(Term { row: m, col: n, harmonics });
        }
    }
    let mut u = vec![C64::new(0.0, 0.0); dim];
    let mut sines = vec![0.0; l_max as usize];
    let rhs = move |t: f64, c: &[C64], out: &mut [C64]| {
        for (i, s) in sines.iter_mut().enumerate() {
            *s = ((i + 1) as f64 * tone.eta * t).sin();
        }
        for n in 0..dim {
            u[n] = c[n] * C64::from_polar(1.0, -lam[n] * t);
        }
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for term in &terms {
            let w: C64 = term.harmonics.iter().zip(&sines).map(|(h, s)| h * *s).sum();
            out[term.row] += w * u[term.col];
        }
        for m in 0..dim {
            out[m] *= C64::from_polar(1.0, lam[m] * t);
        }
    };
    integrate_amplitudes(spec, tone, c0, cfg, fast, rhs)
}

fn reconstruct_raw(c: &AmplitudeState, spec: &DressedSpectrum, t: f64, tone: DriveTone) -> StateVector {
    let phases = DVector::from_iterator(
        spec.dim(),
        (0..spec.dim()).map(|n| {
            let arg = (tone.eps * spec.xi()[n] / tone.eta) * (tone.eta * t).cos() - t * spec.lambdas()[n];
            C64::from_polar(1.0, arg) * c.c[n]
        }),
    );
    StateVector::unchecked(spec.from_dressed(&phases), spec.basis())
}

/// `sum_n exp[(i eps xi_n / eta) cos(eta t) - i t lambda_n] c_n |phi_n>`,
/// normalized.
pub fn reconstruct_bare(c: &AmplitudeState, spec: &DressedSpectrum, t: f64, tone: DriveTone) -> Result<StateVector> {
    let raw = reconstruct_raw(c, spec, t, tone);
    StateVector::normalized(raw.amplitudes().clone(), raw.basis())
}

/// Inverse of [`reconstruct_bare`].
pub fn project_dressed(psi: &StateVector, spec: &DressedSpectrum, t: f64, tone: DriveTone) -> AmplitudeState {
    let d = spec.to_dressed(psi.amplitudes());
    let c = DVector::from_iterator(
        spec.dim(),
        (0..spec.dim()).map(|n| {
            let arg = (tone.eps * spec.xi()[n] / tone.eta) * (tone.eta * t).cos() - t * spec.lambdas()[n];
            C64::from_polar(1.0, -arg) * d[n]
        }),
    );
    AmplitudeState { c }
}

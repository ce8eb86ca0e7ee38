//! Photon-number statistics and atomic excitation extracted from states and
//! trajectories.

use serde::Serialize;

use crate::hilbert::{DickeSpace, StateVector};

/// Below this mean photon number the Mandel factor is undefined.
pub const MANDEL_MIN_MEAN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSample {
    pub t: f64,
    pub mean_n: f64,
    /// `(Var(n) - <n>) / <n>`; NaN when `<n>` is below [`MANDEL_MIN_MEAN`].
    pub mandel_q: f64,
    /// Photon-number distribution, atoms traced out. Sums to `norm^2`.
    pub p_n: Vec<f64>,
    pub p_e: f64,
    pub p_nonvacuum: f64,
    pub norm: f64,
    /// Population of bare states with odd total excitation number
    /// (atomic excitations plus photons).
    pub p_odd_parity: f64,
}

impl ObservableSample {
    pub fn odd_photon_population(&self) -> f64 {
        self.p_n.iter().skip(1).step_by(2).sum()
    }

    pub fn even_photon_population(&self) -> f64 {
        self.p_n.iter().step_by(2).sum()
    }

    /// `P_{n_max} + P_{n_max - 1}`.
    pub fn tail_probability(&self) -> f64 {
        self.p_n.iter().rev().take(2).sum()
    }
}

/// Statistics of `psi` (time stamped 0; see [`photon_statistics_at`]).
pub fn photon_statistics(psi: &StateVector) -> ObservableSample {
    photon_statistics_at(psi, 0.0)
}

pub fn photon_statistics_at(psi: &StateVector, t: f64) -> ObservableSample {
    let basis = psi.basis();
    let fock_dim = basis.fock().map(|f| f.dim()).unwrap_or(1);
    let mut p_n = vec![0.0; fock_dim];
    let mut p_odd_parity = 0.0;
    let mut p_ground_atoms = 0.0;
    for (i, c) in psi.amplitudes().iter().enumerate() {
        let (atoms, photons) = basis.split(i);
        let w = c.norm_sqr();
        p_n[photons] += w;
        if (atoms + photons) % 2 == 1 {
            p_odd_parity += w;
        }
        if atoms == 0 {
            p_ground_atoms += w;
        }
    }
    let norm_sqr: f64 = p_n.iter().sum();
    let (mean_n, mandel_q) = moments(&p_n);
    ObservableSample {
        t,
        mean_n,
        mandel_q,
        p_e: (norm_sqr - p_ground_atoms).max(0.0),
        p_nonvacuum: 1.0 - p_n[0],
        norm: norm_sqr.sqrt(),
        p_odd_parity,
        p_n,
    }
}

/// `(<n>, Q)` of a (possibly unnormalized) distribution.
pub fn moments(p_n: &[f64]) -> (f64, f64) {
    let total: f64 = p_n.iter().sum();
    if total <= 0.0 {
        return (0.0, f64::NAN);
    }
    let mean = p_n.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total;
    let second = p_n.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum::<f64>() / total;
    let var = second - mean * mean;
    let q = if mean < MANDEL_MIN_MEAN { f64::NAN } else { (var - mean) / mean };
    (mean, q)
}

/// `P_e = 1 - sum_n |<0 atoms, n|psi>|^2`.
pub fn atomic_excitation(psi: &StateVector, dicke: &DickeSpace) -> f64 {
    let basis = psi.basis();
    if basis.dicke() != Some(*dicke) {
        return 0.0;
    }
    let ground: f64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| basis.split(*i).0 == 0)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    (psi.norm_sqr() - ground).max(0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub t_star: f64,
    pub max_mean_n: f64,
    pub mandel_q_at_t_star: f64,
    pub p_n_at_t_star: Vec<f64>,
    pub even_photon_population_at_t_star: f64,
    pub odd_photon_population_at_t_star: f64,
    pub max_odd_photon_population: f64,
    pub max_odd_parity_population: f64,
    pub max_tail_probability: f64,
    pub max_norm_drift: f64,
}

/// Photon statistics at the instant of maximum `<n>`, plus whole-run maxima.
/// Returns `None` for an empty trajectory.
pub fn trajectory_summary(samples: &[ObservableSample]) -> Option<TrajectorySummary> {
    let star = samples.iter().max_by(|a, b| a.mean_n.total_cmp(&b.mean_n))?;
    let fold = |f: fn(&ObservableSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Some(TrajectorySummary {
        t_star: star.t,
        max_mean_n: star.mean_n,
        mandel_q_at_t_star: star.mandel_q,
        p_n_at_t_star: star.p_n.clone(),
        even_photon_population_at_t_star: star.even_photon_population(),
        odd_photon_population_at_t_star: star.odd_photon_population(),
        max_odd_photon_population: fold(|s| s.odd_photon_population()),
        max_odd_parity_population: fold(|s| s.p_odd_parity),
        max_tail_probability: fold(|s| s.tail_probability()),
        max_norm_drift: fold(|s| (s.norm * s.norm - 1.0).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Basis, FockSpace, C64};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn vacuum_statistics() {
        let basis = Basis::Product(DickeSpace::full(1), FockSpace::new(4).unwrap());
        let s = photon_statistics(&StateVector::bare(basis, 0, 0).unwrap());
        assert_eq!(s.mean_n, 0.0);
        assert_eq!(s.p_n[0], 1.0);
        assert!(s.mandel_q.is_nan());
        assert_eq!(s.p_nonvacuum, 0.0);
        assert_eq!(s.p_e, 0.0);
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let fock = FockSpace::new(30).unwrap();
        let mean: f64 = 2.0;
        let mut amp = Vec::with_capacity(31);
        let mut c = (-mean / 2.0).exp();
        for n in 0..=30 {
            if n > 0 {
                c *= mean.sqrt() / (n as f64).sqrt();
            }
            amp.push(C64::new(c, 0.0));
        }
        let psi = StateVector::normalized(DVector::from_vec(amp), Basis::Fock(fock)).unwrap();
        let s = photon_statistics(&psi);
        assert_abs_diff_eq!(s.mean_n, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.mandel_q, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn fock_state_is_sub_poissonian() {
        let basis = Basis::Fock(FockSpace::new(8).unwrap());
        let s = photon_statistics(&StateVector::bare(basis, 0, 4).unwrap());
        assert_abs_diff_eq!(s.mandel_q, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn atomic_excitation_of_bare_states() {
        let d = DickeSpace::full(1);
        let basis = Basis::Product(d, FockSpace::new(4).unwrap());
        assert_eq!(atomic_excitation(&StateVector::bare(basis, 0, 3).unwrap(), &d), 0.0);
        assert_eq!(atomic_excitation(&StateVector::bare(basis, 1, 0).unwrap(), &d), 1.0);
        let s = photon_statistics(&StateVector::bare(basis, 1, 0).unwrap());
        assert_eq!(s.p_e, 1.0);
        assert_eq!(s.p_odd_parity, 1.0);
    }

    #[test]
    fn squeezed_vacuum_law() {
        // p_{2m} = (tanh r)^{2m} (2m)! / (2^m m!)^2 / cosh r
        let r: f64 = 0.6;
        let fock = 60;
        let mut p = vec![0.0; fock + 1];
        let t = r.tanh();
        let mut c = 1.0 / r.cosh();
        for m in 0..=fock / 2 {
            if m > 0 {
                c *= t * t * ((2 * m - 1) as f64) / (2 * m) as f64;
            }
            p[2 * m] = c;
        }
        let (mean, q) = moments(&p);
        assert_abs_diff_eq!(mean, r.sinh().powi(2), epsilon = 1e-10);
        assert_abs_diff_eq!(q, 2.0 * mean + 1.0, epsilon = 1e-8);
    }

    #[test]
    fn summary_of_monotone_ramp() {
        let samples: Vec<ObservableSample> = (0..10)
            .map(|i| ObservableSample {
                t: i as f64,
                mean_n: i as f64 * 0.1,
                mandel_q: 0.0,
                p_n: vec![1.0, 0.0, 0.0],
                p_e: 0.0,
                p_nonvacuum: 0.0,
                norm: 1.0,
                p_odd_parity: 0.0,
            })
            .collect();
        let s = trajectory_summary(&samples).unwrap();
        assert_eq!(s.t_star, 9.0);
        assert!(trajectory_summary(&[]).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distribution_invariants(re in prop::collection::vec(-1.0f64..1.0, 12), im in prop::collection::vec(-1.0f64..1.0, 12)) {
                let basis = Basis::Product(DickeSpace::full(1), FockSpace::new(5).unwrap());
                let v = DVector::from_iterator(12, re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)));
                prop_assume!(v.norm() > 1e-3);
                let psi = StateVector::normalized(v, basis).unwrap();
                let s = photon_statistics(&psi);
                prop_assert!(s.p_n.iter().all(|p| *p >= 0.0));
                prop_assert!((s.p_n.iter().sum::<f64>() - s.norm * s.norm).abs() < 1e-9);
                prop_assert!((s.p_nonvacuum - (1.0 - s.p_n[0])).abs() < 1e-15);
                prop_assert!((0.0..=1.0 + 1e-12).contains(&s.p_e));
            }
        }
    }
}

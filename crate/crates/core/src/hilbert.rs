//! Truncated Hilbert spaces and dense operator algebra.
//!
//! Two factors are used: the cavity Fock space `|n>` with `n = 0..=n_max`, and
//! the collective (symmetric) excitation space of the atoms `|k>` with
//! `k = 0..=k_max`. Composite states are always stored Dicke-major: the flat
//! index of `|k> (x) |n>` is `k * (n_max + 1) + n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default cap on the dimension of a tensor product.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Relative tolerance of the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Norm-drift budget accepted when a [`StateVector`] is constructed.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::invalid("n_max", format!("must be at least 2, got {n_max}")));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Collective atomic excitations: `n_qubits = None` is the bosonic
/// (harmonic-oscillator) limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DickeSpace {
    n_qubits: Option<usize>,
    k_max: usize,
}

impl DickeSpace {
    pub fn qubits(n_qubits: usize, k_max: usize) -> Result<Self> {
        if k_max > n_qubits {
            return Err(Error::invalid(
                "k_max",
                format!("{k_max} excitations exceed the {n_qubits} available qubits"),
            ));
        }
        Ok(Self { n_qubits: Some(n_qubits), k_max })
    }

    /// All `N` qubits, `k_max = N`.
    pub fn full(n_qubits: usize) -> Self {
        Self { n_qubits: Some(n_qubits), k_max: n_qubits }
    }

    pub fn oscillator(k_max: usize) -> Self {
        Self { n_qubits: None, k_max }
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.n_qubits
    }

    pub fn is_oscillator(&self) -> bool {
        self.n_qubits.is_none()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dim(&self) -> usize {
        self.k_max + 1
    }

    /// Matrix element `<k|lowering|k+1>`: `sqrt((k+1)(N-k))` for qubits,
    /// `sqrt(k+1)` in the oscillator limit.
    pub fn lowering_element(&self, k: usize) -> f64 {
        match self.n_qubits {
            Some(n) => (((k + 1) * n.saturating_sub(k)) as f64).sqrt(),
            None => ((k + 1) as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Fock(FockSpace),
    Dicke(DickeSpace),
    /// Dicke factor slow, Fock factor fast.
    Product(DickeSpace, FockSpace),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Fock(f) => f.dim(),
            Basis::Dicke(d) => d.dim(),
            Basis::Product(d, f) => d.dim() * f.dim(),
        }
    }

    pub fn fock(&self) -> Option<FockSpace> {
        match self {
            Basis::Fock(f) | Basis::Product(_, f) => Some(*f),
            Basis::Dicke(_) => None,
        }
    }

    pub fn dicke(&self) -> Option<DickeSpace> {
        match self {
            Basis::Dicke(d) | Basis::Product(d, _) => Some(*d),
            Basis::Fock(_) => None,
        }
    }

    /// `(atomic excitations, photons)` of a flat index.
    pub fn split(&self, index: usize) -> (usize, usize) {
        match self {
            Basis::Fock(_) => (0, index),
            Basis::Dicke(_) => (index, 0),
            Basis::Product(_, f) => (index / f.dim(), index % f.dim()),
        }
    }

    pub fn index(&self, atoms: usize, photons: usize) -> Option<usize> {
        match self {
            Basis::Fock(f) => (atoms == 0 && photons <= f.n_max()).then_some(photons),
            Basis::Dicke(d) => (photons == 0 && atoms <= d.k_max()).then_some(atoms),
            Basis::Product(d, f) => (atoms <= d.k_max() && photons <= f.n_max())
                .then(|| atoms * f.dim() + photons),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Operator {
    matrix: DMatrix<C64>,
    basis: Basis,
    hermitian: bool,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, basis: Basis, hermitian: bool) -> Result<Self> {
        let dim = basis.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let op = Self { matrix, basis, hermitian };
        if hermitian {
            let (defect, scale) = op.hermiticity_defect();
            if defect > HERMITIAN_TOL * scale {
                return Err(Error::NotHermitian { defect, scale });
            }
        }
        Ok(op)
    }

    /// Construction from trusted builders whose structure guarantees the flag.
    pub(crate) fn from_parts(matrix: DMatrix<C64>, basis: Basis, hermitian: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), basis.dim());
        Self { matrix, basis, hermitian }
    }

    pub fn identity(basis: Basis) -> Self {
        Self::from_parts(DMatrix::identity(basis.dim(), basis.dim()), basis, true)
    }

    pub fn zeros(basis: Basis) -> Self {
        Self::from_parts(DMatrix::zeros(basis.dim(), basis.dim()), basis, true)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `(max |A - A^dagger|, max |A|)` elementwise.
    pub fn hermiticity_defect(&self) -> (f64, f64) {
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let a = self.matrix[(i, j)];
                scale = scale.max(a.norm());
                defect = defect.max((a - self.matrix[(j, i)].conj()).norm());
            }
        }
        (defect, scale)
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.matrix.adjoint(), self.basis, self.hermitian)
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_basis(other)?;
        Ok(Self::from_parts(&self.matrix * &other.matrix, self.basis, false))
    }

    /// `self + scale * other`; Hermiticity survives only for real `scale`.
    pub fn add_scaled(&self, other: &Operator, scale: C64) -> Result<Self> {
        self.check_basis(other)?;
        let hermitian = self.hermitian && other.hermitian && scale.im == 0.0;
        Ok(Self::from_parts(&self.matrix + &other.matrix * scale, self.basis, hermitian))
    }

    pub fn scaled(&self, scale: C64) -> Self {
        Self::from_parts(&self.matrix * scale, self.basis, self.hermitian && scale.im == 0.0)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_basis(other)?;
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        Ok(Self::from_parts(m, self.basis, false))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        if psi.basis() != self.basis {
            return Err(Error::BasisMismatch("operator and state live on different bases".into()));
        }
        Ok(&self.matrix * psi.amplitudes())
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64> {
        let a_psi = self.apply(psi)?;
        Ok(psi.amplitudes().dotc(&a_psi))
    }

    /// Marks a product as Hermitian after verifying it numerically.
    pub fn into_hermitian(self) -> Result<Self> {
        Self::new(self.matrix, self.basis, true)
    }

    fn check_basis(&self, other: &Operator) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!("{:?} vs {:?}", self.basis, other.basis)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    basis: Basis,
}

impl StateVector {
    /// Requires `| |psi|^2 - 1 | <= NORM_TOL`.
    pub fn new(amplitudes: DVector<C64>, basis: Basis) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: amplitudes.len() });
        }
        let norm_sqr = amplitudes.norm_squared();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes, basis })
    }

    pub fn normalized(amplitudes: DVector<C64>, basis: Basis) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: norm * norm });
        }
        Self::new(amplitudes / C64::from(norm), basis)
    }

    /// Skips the normalization check; used for integrator output whose norm
    /// drift is monitored separately.
    pub(crate) fn unchecked(amplitudes: DVector<C64>, basis: Basis) -> Self {
        Self { amplitudes, basis }
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: index });
        }
        let mut v = DVector::zeros(basis.dim());
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, basis })
    }

    /// Bare product state `|atoms> (x) |photons>`.
    pub fn bare(basis: Basis, atoms: usize, photons: usize) -> Result<Self> {
        let index = basis
            .index(atoms, photons)
            .ok_or_else(|| Error::invalid("state", format!("|{atoms}, {photons}> not in basis")))?;
        Self::basis_state(basis, index)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Largest modulus among complex entries.
pub fn max_abs<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn annihilation(space: &FockSpace) -> Operator {
    let dim = space.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_parts(m, Basis::Fock(*space), false)
}

pub fn creation(space: &FockSpace) -> Operator {
    annihilation(space).dagger()
}

/// `n^k` on the Fock space, computed in integer arithmetic.
pub fn number_power(space: &FockSpace, k: u32) -> Result<Operator> {
    if k == 0 {
        return Err(Error::invalid("k", "n^0 is a constant shift, not a drive"));
    }
    let diag = (0..space.dim() as u64)
        .map(|n| {
            n.checked_pow(k)
                .map(|v| C64::new(v as f64, 0.0))
                .ok_or_else(|| Error::invalid("k", format!("n^{k} overflows at n = {n}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Operator::from_parts(
        DMatrix::from_diagonal(&DVector::from_vec(diag)),
        Basis::Fock(*space),
        true,
    ))
}

/// Collective lowering operator and the collective `sum sigma_z`.
///
/// For qubits `sz = diag(2k - N)`; in the oscillator limit, where `N` is
/// unbounded, `sz = diag(2k)` so that `sz / 2` is the excitation number.
pub fn collective_sigma(space: &DickeSpace) -> Result<(Operator, Operator)> {
    if space.n_qubits() == Some(0) {
        return Err(Error::invalid("n_qubits", "collective operators need at least one qubit"));
    }
    let dim = space.dim();
    let mut lowering = DMatrix::zeros(dim, dim);
    for k in 0..space.k_max() {
        lowering[(k, k + 1)] = C64::new(space.lowering_element(k), 0.0);
    }
    let offset = space.n_qubits().unwrap_or(0) as f64;
    let sz = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        (0..dim).map(|k| C64::new(2.0 * k as f64 - offset, 0.0)),
    ));
    let basis = Basis::Dicke(*space);
    Ok((Operator::from_parts(lowering, basis, false), Operator::from_parts(sz, basis, true)))
}

/// Kronecker product `a (x) b` with `a` on the Dicke factor and `b` on the
/// Fock factor.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    tensor_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_limit(a: &Operator, b: &Operator, max_dim: usize) -> Result<Operator> {
    let (Basis::Dicke(d), Basis::Fock(f)) = (a.basis(), b.basis()) else {
        return Err(Error::BasisMismatch("tensor expects (Dicke, Fock) factors".into()));
    };
    let dim = d.dim() * f.dim();
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, limit: max_dim });
    }
    let m = a.matrix().kronecker(b.matrix());
    Ok(Operator::from_parts(m, Basis::Product(d, f), a.is_hermitian() && b.is_hermitian()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn fock_space_needs_two_photons() {
        assert!(FockSpace::new(1).is_err());
        assert_eq!(FockSpace::new(2).unwrap().dim(), 3);
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(&FockSpace::new(2).unwrap());
        let m = a.matrix();
        assert_eq!(m[(0, 1)], c(1.0));
        assert_eq!(m[(1, 2)], c(2f64.sqrt()));
        let nonzero = m.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn number_operator_from_ladders() {
        let f = FockSpace::new(6).unwrap();
        let n = creation(&f).mul(&annihilation(&f)).unwrap();
        for k in 0..=6 {
            let psi = StateVector::basis_state(Basis::Fock(f), k).unwrap();
            let out = n.apply(&psi).unwrap();
            for (j, z) in out.iter().enumerate() {
                let expected = if j == k { k as f64 } else { 0.0 };
                assert_abs_diff_eq!(z.re, expected, epsilon = 1e-14);
                assert_abs_diff_eq!(z.im, 0.0);
            }
        }
    }

    #[test]
    fn canonical_commutator_away_from_cutoff() {
        let f = FockSpace::new(8).unwrap();
        let a = annihilation(&f);
        let comm = a.commutator(&creation(&f)).unwrap();
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                if i == f.n_max() && j == f.n_max() {
                    // truncation artefact: [a, a+] = -n_max there
                    assert_abs_diff_eq!(comm.matrix()[(i, j)].re, -(f.n_max() as f64), epsilon = 1e-12);
                    continue;
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm.matrix()[(i, j)].re, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn number_power_values() {
        let f = FockSpace::new(3).unwrap();
        let diag = |k| number_power(&f, k).unwrap().matrix().diagonal().map(|z| z.re);
        assert_eq!(diag(1).as_slice(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(diag(2).as_slice(), &[0.0, 1.0, 4.0, 9.0]);
        assert_eq!(diag(3)[2], 8.0);
        assert!(number_power(&f, 0).is_err());
    }

    #[test]
    fn number_power_is_repeated_product() {
        let f = FockSpace::new(10).unwrap();
        let n1 = number_power(&f, 1).unwrap();
        let mut acc = n1.clone();
        for k in 2..=4 {
            acc = acc.mul(&n1).unwrap();
            assert_eq!(acc.matrix(), number_power(&f, k).unwrap().matrix());
        }
    }

    #[test]
    fn collective_lowering_elements() {
        let (l1, _) = collective_sigma(&DickeSpace::full(1)).unwrap();
        assert_eq!(l1.matrix()[(0, 1)], c(1.0));
        let (l4, sz4) = collective_sigma(&DickeSpace::full(4)).unwrap();
        assert_abs_diff_eq!(l4.matrix()[(1, 2)].re, 6f64.sqrt(), epsilon = 1e-15);
        assert_eq!(sz4.matrix()[(0, 0)], c(-4.0));
        assert_eq!(sz4.matrix()[(4, 4)], c(4.0));
        let (b, _) = collective_sigma(&DickeSpace::oscillator(5)).unwrap();
        assert_eq!(b.matrix()[(3, 4)], c(2.0));
    }

    #[test]
    fn single_qubit_pauli_anticommutator() {
        let (lower, _) = collective_sigma(&DickeSpace::full(1)).unwrap();
        let raise = lower.dagger();
        let sum = lower
            .mul(&raise)
            .unwrap()
            .add_scaled(&raise.mul(&lower).unwrap(), c(1.0))
            .unwrap();
        assert_eq!(sum.matrix(), &DMatrix::<C64>::identity(2, 2));
    }

    #[test]
    fn ladder_adjoint_is_exact() {
        let f = FockSpace::new(7).unwrap();
        assert_eq!(annihilation(&f).dagger().matrix(), creation(&f).matrix());
    }

    #[test]
    fn tensor_identities_and_index_order() {
        let d = DickeSpace::full(1);
        let f = FockSpace::new(2).unwrap();
        let id = tensor(&Operator::identity(Basis::Dicke(d)), &Operator::identity(Basis::Fock(f))).unwrap();
        assert_eq!(id.matrix(), &DMatrix::<C64>::identity(6, 6));

        let (lower, _) = collective_sigma(&d).unwrap();
        let op = tensor(&lower, &Operator::identity(Basis::Fock(f))).unwrap();
        let basis = op.basis();
        for n in 0..=2 {
            let psi = StateVector::bare(basis, 1, n).unwrap();
            let out = op.apply(&psi).unwrap();
            let target = basis.index(0, n).unwrap();
            assert_eq!(out[target], c(d.lowering_element(0)));
            assert_abs_diff_eq!(out.norm(), 1.0);
        }
    }

    #[test]
    fn tensor_dimension_guard() {
        let d = DickeSpace::oscillator(99);
        let f = FockSpace::new(99).unwrap();
        let r = tensor_with_limit(&Operator::identity(Basis::Dicke(d)), &Operator::identity(Basis::Fock(f)), 4096);
        assert!(matches!(r, Err(Error::DimensionOverflow { dim: 10000, .. })));
    }

    #[test]
    fn hermiticity_rejected() {
        let f = FockSpace::new(2).unwrap();
        let a = annihilation(&f);
        assert!(Operator::new(a.into_matrix(), Basis::Fock(f), true).is_err());
    }

    #[test]
    fn state_normalization_enforced() {
        let f = Basis::Fock(FockSpace::new(2).unwrap());
        let v = DVector::from_vec(vec![c(1.0), c(1.0), c(0.0)]);
        assert!(StateVector::new(v.clone(), f).is_err());
        let s = StateVector::normalized(v, f).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian(dim: usize, seed: &[f64]) -> DMatrix<C64> {
            let mut m = DMatrix::zeros(dim, dim);
            let mut it = seed.iter().cycle();
            for i in 0..dim {
                for j in i..dim {
                    let re = *it.next().unwrap();
                    let im = if i == j { 0.0 } else { *it.next().unwrap() };
                    m[(i, j)] = C64::new(re, im);
                    m[(j, i)] = C64::new(re, -im);
                }
            }
            m
        }

        proptest! {
            #[test]
            fn trace_factorizes(
                seed_a in prop::collection::vec(-1.0f64..1.0, 9),
                seed_b in prop::collection::vec(-1.0f64..1.0, 16),
                n_max in 2usize..5,
            ) {
                let d = DickeSpace::full(2);
                let f = FockSpace::new(n_max).unwrap();
                let a = Operator::new(hermitian(3, &seed_a), Basis::Dicke(d), true).unwrap();
                let b = Operator::new(hermitian(n_max + 1, &seed_b), Basis::Fock(f), true).unwrap();
                let ab = tensor(&a, &b).unwrap();
                prop_assert!((ab.trace() - a.trace() * b.trace()).norm() < 1e-12);
                prop_assert!(ab.is_hermitian());
                let (defect, scale) = ab.hermiticity_defect();
                prop_assert!(defect <= HERMITIAN_TOL * scale.max(1.0));
            }
        }
    }
}

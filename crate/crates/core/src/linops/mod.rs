//! Dense complex linear algebra shared by the oscillator, pointer and lattice code.
//!
//! [`Operator`] wraps a column-major `faer` matrix of `Complex64`; [`StateVector`]
//! is a plain amplitude vector. Selection states are never required to be
//! normalized, since post-selected apparatus states are not.
//!
//! Memory budget: a dense operator costs `16·dim²` bytes, i.e. about 156 MB at
//! `dim = 3125` (five sites with five levels each). Pipelines at that size keep
//! roughly ten such matrices alive at once.

mod expm;
mod spectral;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::Mat;
pub use num_complex::Complex64;

use crate::error::{Result, WvcfError};

pub use expm::expm;
pub use spectral::{eigh, evolve_heisenberg, polar, HeisenbergFrame, PolarDecomposition, SpectralDecomposition};

/// Relative Hermiticity tolerance used by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative overlap threshold below which a pre/post-selection pair is rejected.
pub const OVERLAP_TOL: f64 = 1e-12;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(Mat<Complex64>);

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(Mat::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Operator(Mat::from_fn(dim, dim, f))
    }

    /// Builds an operator from row-major data.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(WvcfError::DimensionMismatch { expected: dim, found: bad.len() });
        }
        let op = Operator::from_fn(dim, |i, j| rows[i][j]);
        if !op.is_finite() {
            return Err(WvcfError::Domain("operator entries must be finite".into()));
        }
        Ok(op)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> =
            rows.iter().map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect()).collect();
        Operator::from_rows(&rows)
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Operator::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn real_diagonal(diag: &[f64]) -> Self {
        Operator::from_fn(diag.len(), |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Wraps an existing `faer` matrix. Panics if it is not square.
    pub fn from_mat(mat: Mat<Complex64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator must be square");
        Operator(mat)
    }

    pub fn as_mat(&self) -> &Mat<Complex64> {
        &self.0
    }

    pub fn into_mat(self) -> Mat<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.0[(i, j)] = value;
    }

    pub fn column(&self, j: usize) -> StateVector {
        StateVector(self.0.col_as_slice(j).to_vec())
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint().to_owned())
    }

    pub fn scale(&self, c: Complex64) -> Operator {
        Operator(Mat::from_fn(self.dim(), self.dim(), |i, j| self.0[(i, j)] * c))
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }

    /// Matrix-vector product `self · v`.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), v.dim())?;
        let mut out = vec![ZERO; self.dim()];
        for (j, &vj) in v.0.iter().enumerate() {
            if vj == ZERO {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.0.col_as_slice(j)) {
                *o += a * vj;
            }
        }
        Ok(StateVector(out))
    }

    /// `self† · v` without forming the adjoint.
    pub fn apply_adjoint(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), v.dim())?;
        let out =
            (0..self.dim()).map(|j| self.0.col_as_slice(j).iter().zip(&v.0).map(|(a, b)| a.conj() * b).sum()).collect();
        Ok(StateVector(out))
    }

    /// `⟨left|self|right⟩`.
    pub fn sandwich(&self, left: &StateVector, right: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), left.dim())?;
        Ok(left.inner(&self.apply(right)?))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.0.col_as_slice(j).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        acc.sqrt()
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.dim()).map(|j| self.0.col_as_slice(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖_F / ‖A‖_F`, zero for the zero matrix.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += (self.0[(i, j)] - self.0[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt() / norm
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim()).all(|j| self.0.col_as_slice(j).iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Operator) -> f64 {
        (self - other).frobenius_norm()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &self.matmul(other) - &other.matmul(self)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.0 += &rhs.0;
    }
}

/// Complex amplitude vector; normalization is not enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        StateVector(amplitudes)
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        StateVector(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![ZERO; dim])
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[k] = ONE;
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(WvcfError::Domain("cannot normalize a zero or non-finite state".into()));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// `⟨self|other⟩` (antilinear in `self`).
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, c: Complex64) -> StateVector {
        StateVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Tensor product with `self` as the major factor.
    pub fn kron(&self, other: &StateVector) -> StateVector {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            out.extend(other.0.iter().map(|b| a * b));
        }
        StateVector(out)
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(WvcfError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Kronecker product with `a`'s index major.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let (da, db) = (a.dim(), b.dim());
    let dim = kron_dim(da, db)?;
    Ok(Operator::from_fn(dim, |i, j| a.get(i / db, j / db) * b.get(i % db, j % db)))
}

fn kron_dim(da: usize, db: usize) -> Result<usize> {
    let bytes_fit = |d: usize| {
        d.checked_mul(d)
            .and_then(|n| n.checked_mul(std::mem::size_of::<Complex64>()))
            .is_some_and(|bytes| bytes <= isize::MAX as usize)
    };
    da.checked_mul(db)
        .filter(|&d| bytes_fit(d))
        .ok_or_else(|| WvcfError::SizeOverflow(format!("kron of {da}x{da} and {db}x{db}")))
}

/// Weak value `⟨post|op|pre⟩ / ⟨post|pre⟩`.
pub fn weak_value(op: &Operator, pre: &StateVector, post: &StateVector) -> Result<Complex64> {
    check_dim(op.dim(), pre.dim())?;
    check_dim(op.dim(), post.dim())?;
    let overlap = post.inner(pre);
    let scale = pre.norm() * post.norm();
    if overlap.norm() <= OVERLAP_TOL * scale || scale == 0.0 {
        return Err(WvcfError::PostSelection { overlap: overlap.norm() });
    }
    Ok(op.sandwich(post, pre)? / overlap)
}

pub fn pauli_x() -> Operator {
    Operator::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
}

pub fn pauli_y() -> Operator {
    Operator::from_fn(2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => ZERO,
    })
}

pub fn pauli_z() -> Operator {
    Operator::real_diagonal(&[1.0, -1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_operator, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_sigma_z_identity() {
        let k = kron(&pauli_z(), &Operator::identity(2)).unwrap();
        assert_eq!(k, Operator::real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn kron_dimension_law() {
        let k = kron(&Operator::identity(5), &Operator::zeros(5)).unwrap();
        assert_eq!(k.dim(), 25);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let a = random_operator(&mut rng, 3);
            let b = random_operator(&mut rng, 3);
            let id = Operator::identity(3);
            let lhs = kron(&a, &id).unwrap().matmul(&kron(&id, &b).unwrap());
            let rhs = kron(&a, &b).unwrap();
            assert!(lhs.distance(&rhs) <= 1e-12 * rhs.frobenius_norm());
        }
    }

    #[test]
    fn kron_overflow_is_reported() {
        assert!(matches!(kron_dim(usize::MAX / 2, 3), Err(WvcfError::SizeOverflow(_))));
        assert!(matches!(kron_dim(1 << 31, 1 << 10), Err(WvcfError::SizeOverflow(_))));
        assert_eq!(kron_dim(6, 2).unwrap(), 12);
    }

    #[test]
    fn weak_value_of_identity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pre = random_state(&mut rng, 4);
        let post = random_state(&mut rng, 4);
        let w = weak_value(&Operator::identity(4), &pre, &post).unwrap();
        assert!((w - ONE).norm() < 1e-14);
    }

    #[test]
    fn weak_value_eigenvector_returns_eigenvalue() {
        let op = Operator::real_diagonal(&[0.5, -2.0, 3.0]);
        let v = StateVector::basis(3, 1);
        let w = weak_value(&op, &v, &v).unwrap();
        assert!((w - c(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weak_value_sigma_z_up_plus() {
        let up = StateVector::basis(2, 0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[s, s]);
        let w = weak_value(&pauli_z(), &up, &plus).unwrap();
        assert!((w - ONE).norm() < 1e-15);
    }

    #[test]
    fn weak_value_orthogonal_selection_fails() {
        let up = StateVector::basis(2, 0);
        let down = StateVector::basis(2, 1);
        match weak_value(&pauli_z(), &up, &down) {
            Err(WvcfError::PostSelection { overlap }) => assert_eq!(overlap, 0.0),
            other => panic!("expected post-selection failure, got {other:?}"),
        }
    }

    #[test]
    fn weak_value_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_operator(&mut rng, 5);
        let b = random_operator(&mut rng, 5);
        let pre = random_state(&mut rng, 5);
        let post = random_state(&mut rng, 5);
        let (alpha, beta) = (c(0.3, -1.2), c(-2.0, 0.7));
        let combo = &a.scale(alpha) + &b.scale(beta);
        let lhs = weak_value(&combo, &pre, &post).unwrap();
        let rhs = alpha * weak_value(&a, &pre, &post).unwrap() + beta * weak_value(&b, &pre, &post).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn from_rows_rejects_ragged_input() {
        let rows = vec![vec![ONE, ZERO], vec![ONE]];
        assert!(matches!(Operator::from_rows(&rows), Err(WvcfError::DimensionMismatch { .. })));
    }

    #[test]
    fn apply_checks_dimension() {
        let err = Operator::identity(3).apply(&StateVector::zeros(2)).unwrap_err();
        assert!(matches!(err, WvcfError::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn apply_adjoint_matches_explicit_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_operator(&mut rng, 5);
        let v = random_state(&mut rng, 5);
        let lhs = a.apply_adjoint(&v).unwrap();
        let rhs = a.adjoint().apply(&v).unwrap();
        assert!(lhs.distance(&rhs) < 1e-14);
    }
}

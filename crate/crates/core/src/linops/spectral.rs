use faer::{Mat, Side};

use super::{check_dim, Complex64, Operator, StateVector, HERMITIAN_TOL};
use crate::error::{Result, WvcfError};

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: Operator,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        self.eigenvectors.column(k)
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> Operator {
        let v = self.eigenvectors.as_mat();
        let scaled = Mat::from_fn(self.dim(), self.dim(), |i, j| v[(i, j)] * f(self.eigenvalues[j]));
        Operator::from_mat(&scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> Operator {
        self.reconstruct_with(|l| Complex64::new(l, 0.0))
    }
}

/// Hermitian eigensolver. Each eigenvector is phase-fixed so that its first
/// component of largest magnitude is real and positive.
pub fn eigh(h: &Operator) -> Result<SpectralDecomposition> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(WvcfError::NotHermitian { deviation });
    }
    if !h.is_finite() {
        return Err(WvcfError::Domain("eigh input has non-finite entries".into()));
    }
    let evd = h.as_mat().self_adjoint_eigen(Side::Lower).map_err(|e| {
        WvcfError::Numerical(format!("Hermitian eigensolver did not converge ({e:?}, dim {})", h.dim()))
    })?;
    let eigenvalues: Vec<f64> = (0..h.dim()).map(|k| evd.S()[k].re).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..h.dim() {
        fix_phase(vectors.col_as_slice_mut(j));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors: Operator::from_mat(vectors) })
}

pub(crate) fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    // near-ties resolved towards the lowest index so rounding cannot flip the choice
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-10)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

/// Heisenberg picture `e^{iHt} x e^{−iHt}` with `x` cached in the eigenbasis of `H`,
/// so each time costs two basis changes and a diagonal phase.
#[derive(Clone, Debug)]
pub struct HeisenbergFrame<'a> {
    hdec: &'a SpectralDecomposition,
    original: Operator,
    in_eigenbasis: Mat<Complex64>,
}

impl<'a> HeisenbergFrame<'a> {
    pub fn new(hdec: &'a SpectralDecomposition, x: &Operator) -> Result<Self> {
        check_dim(hdec.dim(), x.dim())?;
        let v = hdec.eigenvectors.as_mat();
        let in_eigenbasis = v.adjoint() * (x.as_mat() * v);
        Ok(HeisenbergFrame { hdec, original: x.clone(), in_eigenbasis })
    }

    pub fn operator(&self) -> &Operator {
        &self.original
    }

    pub fn at(&self, t: f64) -> Operator {
        if t == 0.0 {
            return self.original.clone();
        }
        let phases: Vec<Complex64> = self.hdec.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, e * t)).collect();
        let n = self.hdec.dim();
        let rotated = Mat::from_fn(n, n, |j, k| self.in_eigenbasis[(j, k)] * phases[j] * phases[k].conj());
        let v = self.hdec.eigenvectors.as_mat();
        Operator::from_mat(v * (&rotated * v.adjoint()))
    }
}

/// `e^{iHt} x e^{−iHt}` for a single time.
pub fn evolve_heisenberg(hdec: &SpectralDecomposition, x: &Operator, t: f64) -> Result<Operator> {
    Ok(HeisenbergFrame::new(hdec, x)?.at(t))
}

/// Polar factors `g = u · r` obtained from the SVD `g = W Σ V†` as `u = W V†`,
/// `r = V Σ V†`.
#[derive(Clone, Debug)]
pub struct PolarDecomposition {
    pub u: Operator,
    pub r: Operator,
    /// Singular values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// Right singular vectors; these diagonalize `r`.
    pub right_vectors: Operator,
    /// Set when `g` is numerically rank deficient, in which case `u` is not unique.
    pub degenerate: bool,
}

impl PolarDecomposition {
    /// Spectral data of the Hermitian factor, eigenvalues ascending.
    pub fn r_spectrum(&self) -> SpectralDecomposition {
        let n = self.singular_values.len();
        let v = self.right_vectors.as_mat();
        SpectralDecomposition {
            eigenvalues: self.singular_values.iter().rev().copied().collect(),
            eigenvectors: Operator::from_mat(Mat::from_fn(n, n, |i, j| v[(i, n - 1 - j)])),
        }
    }
}

pub fn polar(g: &Operator) -> Result<PolarDecomposition> {
    if !g.is_finite() {
        return Err(WvcfError::Domain("polar input has non-finite entries".into()));
    }
    let n = g.dim();
    let svd = g.as_mat().svd().map_err(|e| WvcfError::Numerical(format!("SVD did not converge ({e:?}, dim {n})")))?;
    let w = svd.U();
    let v = svd.V();
    let singular_values: Vec<f64> = (0..n).map(|k| svd.S()[k].re).collect();
    let u = w * v.adjoint();
    let vs = Mat::from_fn(n, n, |i, j| v[(i, j)] * singular_values[j]);
    let r = &vs * v.adjoint();
    // symmetrize away rounding in the Hermitian factor
    let r = Mat::from_fn(n, n, |i, j| (r[(i, j)] + r[(j, i)].conj()) * 0.5);
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let smin = singular_values.last().copied().unwrap_or(0.0);
    let degenerate = smax == 0.0 || smin <= smax * f64::EPSILON * n as f64;
    Ok(PolarDecomposition {
        u: Operator::from_mat(u),
        r: Operator::from_mat(r),
        singular_values,
        right_vectors: Operator::from_mat(v.to_owned()),
        degenerate,
    })
}

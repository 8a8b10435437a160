//! General complex matrix exponential.
//!
//! Scaling and squaring with diagonal Padé approximants of degree 3, 5, 7, 9 or
//! 13, chosen from the 1-norm as in Higham (2005). The coupling operators
//! exponentiated here (`Ĝ⊗σ_y` with non-Hermitian `Ĝ`) rule out spectral methods.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::{Complex64, Operator};
use crate::error::{Result, WvcfError};

#[allow(clippy::excessive_precision)]
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Beyond this many squarings the input norm is ~2^1000 and the result overflows anyway.
const MAX_SQUARINGS: i32 = 1000;

/// Returns `exp(scale · a)`.
pub fn expm(a: &Operator, scale: Complex64) -> Result<Operator> {
    let n = a.dim();
    if scale == Complex64::new(0.0, 0.0) {
        return Ok(Operator::identity(n));
    }
    let x = a.scale(scale);
    if !x.is_finite() {
        return Err(WvcfError::Numerical("matrix exponential of non-finite input".into()));
    }
    let norm = x.norm_one();
    if norm == 0.0 {
        return Ok(Operator::identity(n));
    }

    for (m, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return finish(pade_low(x.as_mat(), coeffs), 0);
        }
    }

    let s = (norm / THETA_13).log2().ceil().max(0.0);
    if s > MAX_SQUARINGS as f64 {
        return Err(WvcfError::Numerical(format!("matrix exponential overflow (1-norm {norm:.3e})")));
    }
    let s = s as i32;
    let scaled = x.as_mat() * faer::Scale(Complex64::new(0.5f64.powi(s), 0.0));
    finish(pade13(&scaled), s)
}

fn finish((u, v): (Mat<Complex64>, Mat<Complex64>), squarings: i32) -> Result<Operator> {
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    let r = Operator::from_mat(r);
    if !r.is_finite() {
        return Err(WvcfError::Numerical("matrix exponential produced non-finite entries".into()));
    }
    Ok(r)
}

fn scaled_identity(n: usize, c: f64) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| if i == j { Complex64::new(c, 0.0) } else { Complex64::new(0.0, 0.0) })
}

fn axpy(acc: &mut Mat<Complex64>, c: f64, m: &Mat<Complex64>) {
    *acc += m * faer::Scale(Complex64::new(c, 0.0));
}

/// Odd/even parts `(U, V)` of the Padé numerator for degree 3..9.
fn pade_low(a: &Mat<Complex64>, b: &[f64]) -> (Mat<Complex64>, Mat<Complex64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut u_inner = scaled_identity(n, b[1]);
    let mut v = scaled_identity(n, b[0]);
    let mut power = a2.clone();
    let mut k = 2;
    while k < b.len() {
        axpy(&mut v, b[k], &power);
        axpy(&mut u_inner, b[k + 1], &power);
        k += 2;
        if k < b.len() {
            power = &power * &a2;
        }
    }
    (a * &u_inner, v)
}

fn pade13(a: &Mat<Complex64>) -> (Mat<Complex64>, Mat<Complex64>) {
    let b = &B13;
    let n = a.nrows();
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut w1 = Mat::zeros(n, n);
    axpy(&mut w1, b[13], &a6);
    axpy(&mut w1, b[11], &a4);
    axpy(&mut w1, b[9], &a2);
    let mut w2 = scaled_identity(n, b[1]);
    axpy(&mut w2, b[7], &a6);
    axpy(&mut w2, b[5], &a4);
    axpy(&mut w2, b[3], &a2);
    let u = a * (&(&a6 * &w1) + &w2);

    let mut z1 = Mat::zeros(n, n);
    axpy(&mut z1, b[12], &a6);
    axpy(&mut z1, b[10], &a4);
    axpy(&mut z1, b[8], &a2);
    let mut z2 = scaled_identity(n, b[0]);
    axpy(&mut z2, b[6], &a6);
    axpy(&mut z2, b[4], &a4);
    axpy(&mut z2, b[2], &a2);
    let v = &(&a6 * &z1) + &z2;
    (u, v)
}

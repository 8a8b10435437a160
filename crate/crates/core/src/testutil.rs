//! Random instances for unit tests.

use rand::Rng;

use crate::linops::{Complex64, Operator, StateVector};

pub(crate) fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub(crate) fn random_operator<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_fn(dim, |_, _| random_complex(rng))
}

pub(crate) fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> Operator {
    let a = random_operator(rng, dim);
    (&a + &a.adjoint()).scale(Complex64::new(0.5, 0.0))
}

pub(crate) fn random_state<R: Rng>(rng: &mut R, dim: usize) -> StateVector {
    StateVector::new((0..dim).map(|_| random_complex(rng)).collect())
}

//! Exact pointer response against the first-order formula: the gap shrinks as `g²`.
//!
//! Run: `cargo run --release --example first_order_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wvcf::linops::{pauli_x, pauli_y, pauli_z, weak_value};
use wvcf::weakmeas::{final_spin_expectations, first_order_expectation, joint_coupling_kernel, PointerState};
use wvcf::{Complex64, Operator, StateVector};

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    StateVector::new(
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
    )
}

fn main() -> wvcf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dim = 6;
    let a = Operator::from_fn(dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let pointer = PointerState::default();
    let pre = random_state(&mut rng, dim).normalized()?;
    let post = random_state(&mut rng, dim).normalized()?;
    let gw = weak_value(&a, &pre, &post)?;
    println!("G_w = {gw:.6}");

    let gap = |g: f64| -> wvcf::Result<f64> {
        let kernel = joint_coupling_kernel(&a, &pre, &post, g, &pauli_y())?;
        let exact = final_spin_expectations(&kernel, &pointer)?;
        let mut worst: f64 = 0.0;
        for (m, e) in [(pauli_x(), exact.sx), (pauli_y(), exact.sy), (pauli_z(), exact.sz)] {
            worst = worst.max((first_order_expectation(&m, &pauli_y(), gw, g, &pointer)? - e).abs());
        }
        Ok(worst)
    };
    let mut last = None;
    for g in [1e-1, 1e-2, 1e-3, 1e-4] {
        let d = gap(g)?;
        match last {
            Some(prev) => println!("g = {g:e}: gap {d:.3e}, shrink {:.1}", prev / d),
            None => println!("g = {g:e}: gap {d:.3e}"),
        }
        last = Some(d);
    }
    Ok(())
}

//! Weak-to-strong transition: readout of `G(t)` at one time slice as the pointer
//! coupling grows, and whole curves for a few couplings.
//!
//! Run: `cargo run --release --example coupling_sweep`

use wvcf::pqho::{GroundStateMethod, PqhoModel, PqhoSystem};
use wvcf::weakmeas::{wvcf_curve_with, PointerState};

fn main() -> wvcf::Result<()> {
    let model = PqhoModel::natural(0.1, 6)?;
    let system = PqhoSystem::new(&model)?;
    let ground = system.ground_state(GroundStateMethod::ExactEigensolve)?;
    let pointer = PointerState::default();

    let t = 5.1;
    println!("t = {t}");
    println!("{:>6} {:>24} {:>24} {:>10}", "g", "readout", "truth", "|error|");
    for g in [1.0, 0.7, 0.4, 0.2, 0.1, 0.05, 0.01] {
        let p = wvcf_curve_with(&system, &ground, &[t], g, &pointer)?[0];
        let (z, w) = (p.estimate.value, p.truth);
        println!("{g:>6} {:>11.7} {:>+11.7}i {:>11.7} {:>+11.7}i {:>10.3e}", z.re, z.im, w.re, w.im, (z - w).norm());
    }

    let t_grid: Vec<f64> = (0..300).map(|k| 0.1 * k as f64).collect();
    println!("\nlargest |error| over t in [0, 30)");
    for g in [0.4, 0.2, 0.1, 0.05, 0.01] {
        let curve = wvcf_curve_with(&system, &ground, &t_grid, g, &pointer)?;
        let worst = curve.iter().map(|p| (p.estimate.value - p.truth).norm()).fold(0.0, f64::max);
        println!("g = {g:<5} {worst:.3e}");
    }
    Ok(())
}

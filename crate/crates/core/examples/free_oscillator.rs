//! Free oscillator: the qubit-pointer readout of `⟨x(t)x(0)⟩` against `e^{−it}/2`.
//!
//! Run: `cargo run --release --example free_oscillator`

use wvcf::pqho::{GroundStateMethod, PqhoModel, PqhoSystem};
use wvcf::weakmeas::{wvcf_curve_with, PointerState};
use wvcf::Complex64;

fn main() -> wvcf::Result<()> {
    let model = PqhoModel::natural(0.0, 6)?;
    let system = PqhoSystem::new(&model)?;
    let ground = system.ground_state(GroundStateMethod::ExactEigensolve)?;
    let t_grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
    let points = wvcf_curve_with(&system, &ground, &t_grid, 1e-4, &PointerState::default())?;

    println!("{:>5} {:>24} {:>24} {:>10}", "t", "readout", "e^{-it}/2", "rel err");
    for p in &points {
        let exact = Complex64::from_polar(0.5, -p.t);
        let z = p.estimate.value;
        let rel = (z - exact).norm() / exact.norm();
        println!("{:>5.1} {:>11.7} {:>+11.7}i {:>11.7} {:>+11.7}i {rel:>10.2e}", p.t, z.re, z.im, exact.re, exact.im);
    }
    Ok(())
}

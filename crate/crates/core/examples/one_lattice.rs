//! One-site φ⁴ against the quartic oscillator with `λ_qm = λ/4!`: identical truths,
//! two readout routes.
//!
//! Run: `cargo run --release --example one_lattice`

use wvcf::phi4::one_lattice_compare;
use wvcf::weakmeas::PointerState;

fn main() -> wvcf::Result<()> {
    let t_grid: Vec<f64> = (0..30).map(|k| k as f64).collect();
    for strength in [1e-3, 1e-1] {
        let rows = one_lattice_compare(2.4, 1.0, 6, &t_grid, strength, strength, &PointerState::default())?;
        println!("g = dg = {strength}");
        println!("{:>4} {:>24} {:>10} {:>10} {:>10}", "t", "truth", "truth gap", "aav err", "action err");
        for r in &rows {
            let scale = r.pqho_true.norm();
            println!(
                "{:>4} {:>11.7} {:>+11.7}i {:>10.1e} {:>10.2e} {:>10.2e}",
                r.t,
                r.pqho_true.re,
                r.pqho_true.im,
                (r.pqho_true - r.phi4_true).norm(),
                (r.aav - r.pqho_true).norm() / scale,
                (r.action - r.phi4_true).norm() / scale
            );
        }
        println!();
    }
    Ok(())
}

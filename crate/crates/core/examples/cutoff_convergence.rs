//! Fock cutoff study: the first-order Gell-Mann–Low state gives a `G(0,0)` that is
//! fixed from cutoff 6 on and drops when the cutoff removes its top level.
//!
//! Run: `cargo run --release --example cutoff_convergence`

use wvcf::pqho::{cutoff_convergence, ConvergenceState, PqhoModel};

fn main() -> wvcf::Result<()> {
    let base = PqhoModel::natural(0.2, 10)?;
    let t_grid = [0.0, 1.0, 2.0, 5.0];
    for state in [ConvergenceState::GlOrder1, ConvergenceState::Exact] {
        let table = cutoff_convergence(&base, &[5, 6, 7, 8, 10, 12], &t_grid, state)?;
        println!("{state:?}, lambda = {}", base.lambda);
        println!("{:>7} {:>14} {:>22}", "cutoff", "G(0,0)", "G(5)");
        for row in &table.rows {
            println!(
                "{:>7} {:>14.10} {:>10.7} {:>+10.7}i",
                row.cutoff, row.equal_time, row.values[3].re, row.values[3].im
            );
        }
        println!("stable from cutoff {} at {:.10}\n", table.stable_from, table.stabilized_value);
    }
    Ok(())
}

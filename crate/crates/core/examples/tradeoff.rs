//! Finite-copy trade-off: larger `g` buys signal against shot noise at the cost of
//! bias, so the best coupling shrinks as the number of copies grows.
//!
//! Run: `cargo run --release --example tradeoff`

use wvcf::shots::{run_grid, Comparison, ShotConfig};

fn main() -> wvcf::Result<()> {
    let config = ShotConfig { m: 1000, ..ShotConfig::default() };
    let grid = run_grid(&config)?;
    println!("truth at t = {}: {:.8}", config.t_slice, grid.z_tv);

    println!("\n{:>5} {:>6} {:>12} {:>12} {:>9}", "g", "N", "mean |z_RV|", "var |z_RV|", "failures");
    for cell in grid.cells.iter().filter(|c| [0.1, 0.5, 1.0].contains(&c.g)) {
        if let Some(s) = &cell.summary {
            println!(
                "{:>5} {:>6} {:>12.5} {:>12.3e} {:>9}",
                cell.g, cell.n, s.modulus.mean, s.modulus.variance, s.failures
            );
        }
    }

    println!("\n{:>6} {:>6} {:>11}", "N", "g*", "rule");
    for &n in &config.n_list {
        let d = grid.optimal_g(n, Comparison::Modulus)?;
        println!("{n:>6} {:>6} {:>11?}", d.g_star, d.rule);
    }
    Ok(())
}

//! Shot-noise law: at fixed `g` the inverse variance of the relative error grows
//! linearly with the number of copies, for each statistic family.
//!
//! Run: `cargo run --release --example shot_noise`

use wvcf::shots::{run_grid, ShotConfig};

fn main() -> wvcf::Result<()> {
    let g = 0.3;
    let config =
        ShotConfig { g_list: vec![g], n_list: vec![10, 30, 100, 300, 1000, 3000], m: 2000, ..ShotConfig::default() };
    let grid = run_grid(&config)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "N", "1/var cplx", "1/var mod", "1/var re", "1/var im");
    for cell in &grid.cells {
        if let Some(s) = &cell.summary {
            let inv = |v: f64| 1.0 / v;
            println!(
                "{:>6} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                cell.n,
                inv(s.complex_variance),
                inv(s.modulus.variance),
                inv(s.real.variance),
                inv(s.imag.variance)
            );
        }
    }

    println!("\nfit of 1/var against N at g = {g}");
    for f in grid.scaling(g)? {
        match f.fit {
            Some(fit) => println!(
                "{:<8} slope {:.5}  intercept {:+.4}  r2 {:.5}",
                f.family.name(),
                fit.slope,
                fit.intercept,
                fit.r2
            ),
            None => println!("{:<8} not enough usable copy counts", f.family.name()),
        }
    }
    Ok(())
}

//! Coupling calibration: which `λ` gives reference values of `G(0,0)` for the
//! eigensolved ground state and for the two first-order recipes.
//!
//! Run: `cargo run --release --example calibration`

use wvcf::cli::{calibrate_lambda, parse_grid, CalibrationSeries};

fn main() -> wvcf::Result<()> {
    let lambdas = parse_grid("0:0.5005:0.001")?;
    let report = calibrate_lambda(1.0, 1.0, &lambdas, 40, 6, 0.37, 0.35697259)?;
    for fit in &report.fits {
        println!(
            "{:<15} target {:<11} best lambda {:.3} (residual {:+.2e}), crossings {:?}",
            fit.series, fit.target, fit.best_lambda, fit.best_residual, fit.roots
        );
    }
    for j in &report.joint {
        println!("joint with {:<15} best lambda {:.3}, residual {:.2e}", j.first_order, j.best_lambda, j.residual);
    }

    println!("\nG(0,0) at lambda = 0.2");
    for s in CalibrationSeries::ALL {
        let cutoff = if s == CalibrationSeries::Exact { 40 } else { 6 };
        println!("{:<15} {:.10}", s.name(), s.evaluate(1.0, 1.0, 0.2, cutoff)?);
    }
    println!("{:<15} {:.10}", "gl1 cutoff 5", CalibrationSeries::GlNormalized.evaluate(1.0, 1.0, 0.2, 5)?);
    Ok(())
}

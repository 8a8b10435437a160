//! Polar decomposition of a non-Hermitian excitation operator and the two
//! detection-probability channels that recover its weak value.
//!
//! Run: `cargo run --release --example polar_readout`

use wvcf::linops::{polar, weak_value};
use wvcf::phi4::{action_readout_for, polar_parts, Selections};
use wvcf::pqho::{PqhoModel, PqhoSystem};

fn main() -> wvcf::Result<()> {
    let system = PqhoSystem::new(&PqhoModel::natural(0.1, 6)?)?;
    let omega = system.hdec.eigenvector(0);
    let gop = system.excitations()?.at(1.5);

    let p = polar(&gop)?;
    let u_defect = p.u.adjoint().matmul(&p.u).distance(&wvcf::Operator::identity(gop.dim()));
    println!("‖U R − G‖ = {:.2e}, ‖U†U − 1‖ = {u_defect:.2e}", p.u.matmul(&p.r).distance(&gop));
    println!("smallest eigenvalue of R: {:.3e}", p.r_spectrum().eigenvalues[0]);

    let parts = polar_parts(&gop, &omega)?;
    println!("⟨Θ|Ω⟩ = {:.6}", parts.theta.inner(&omega));

    let selections = Selections::default();
    println!(
        "apparatus weak values: {:.3}, {:.3}",
        selections.pair1.apparatus_weak_value()?,
        selections.pair2.apparatus_weak_value()?
    );
    println!("direct ⟨Ω|G|Ω⟩ = {:.8}", weak_value(&gop, &omega, &omega)?);
    for dg in [1e-1, 1e-2, 1e-3, 1e-4] {
        let r = action_readout_for(&gop, &omega, dg, &selections)?;
        println!("dg = {dg:e}: G_w = {:.8}, |error| {:.2e}", r.g_w, (r.g_w - r.direct).norm());
    }
    Ok(())
}

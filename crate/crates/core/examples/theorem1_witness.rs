//! Builds the first counterexample on a small box: witnesses `uₙ` with
//! `sym(DuₙP) = 0` away from a null set, `‖Duₙ‖_q^q ≈ 2` and `sup|uₙ| ≤ 2/n`.
//!
//! cargo run --release --example theorem1_witness [q]

use kornlab::geometry::{Aabb, DecompositionMode};
use kornlab::thm1::{verify_construction, PointTag, Theorem1, Theorem1Params, VerifyOptions};
use nalgebra::Point3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2.0);
    let region = Aabb::cube(Point3::origin(), 0.25);
    let params = Theorem1Params::new(region, vec![1, 2, 4, 8], q, 1e-3).with_seed(7);
    let t = Theorem1::build(&params)?;

    let x = Point3::new(0.11, 0.07, 0.19);
    let b = t.eval_bundle(4, &x)?;
    println!("at {x}: tag {:?}", b.tag);
    println!("  u      = {:?}", b.u.as_slice());
    println!("  det P  = {:.15}", b.p.determinant());
    if b.tag == PointTag::Interior {
        println!("  |DuP + (DuP)^T| = {:.2e}", b.sym2().norm());
    }

    let report = verify_construction(&t, &VerifyOptions { samples: 200_000, seed: 7 })?;
    println!("\n  n   sym max    |Du|_q^q certified      sup|u|    2/n");
    for r in &report.records {
        println!(
            "{:>3}   {:.1e}   [{:.6}, {:.6}]   {:.4}   {:.4}",
            r.n, r.sym_residual_max, r.norm_q_pow_q_lower, r.norm_q_pow_q_upper, r.sup_norm_observed, r.sup_norm_bound
        );
    }
    println!("failures: {:?}", report.failures());

    // one shared coefficient field for all levels, each on its own slab
    let slabs = Theorem1::build(&params.clone().with_mode(DecompositionMode::Slabs))?;
    for l in slabs.levels() {
        println!("slab {} hosts n={} (volume {:.3e})", l.part_index, l.n, l.measure);
    }
    Ok(())
}

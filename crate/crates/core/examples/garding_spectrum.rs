//! Smallest discrete constant `κ` in `∫|sym(DuP)|² + λ∫|u|² ≥ κ∫|Du|²` on
//! trilinear finite elements: first for `P = I` (continuum value ½), then
//! for the coefficient field of the first construction with the mesh
//! refined along with the covering.
//!
//! cargo run --release --example garding_spectrum

use kornlab::analysis::{assemble_forms, constant_p, min_garding_eig, theorem1_spectrum, EigenOptions, Mesh};
use kornlab::geometry::Aabb;
use kornlab::thm1::{Theorem1, Theorem1Params};
use nalgebra::{Matrix3, Point3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = Aabb::cube(Point3::origin(), 0.25);
    let opts = EigenOptions::default();

    for m in [4, 8, 12] {
        let forms = assemble_forms(&Mesh::new(region, m)?, constant_p(Matrix3::identity()), 2)?;
        let r = min_garding_eig(&forms, 0.0, &opts)?;
        println!("P = I, lambda = 0, {m:>2}^3 cells: kappa = {:.6} ({} dofs, {} iterations)", r.kappa, r.dofs, r.iterations);
    }

    let mut params = Theorem1Params::new(region, vec![1, 2, 3, 4], 2.0, 1e-2);
    params.packing.mc_samples = 0;
    let t = Theorem1::build(&params)?;
    for n in [1, 2, 3, 4] {
        let rung = theorem1_spectrum(&t, n, 4 * n as usize, 1.0, &opts)?;
        println!(
            "first construction, n = {n}, {:>2}^3 cells: kappa = {:.6} <= witness quotient {:.6}",
            4 * n,
            rung.result.kappa,
            rung.witness_quotient
        );
    }
    Ok(())
}

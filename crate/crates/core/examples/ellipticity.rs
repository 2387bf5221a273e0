//! The pointwise symbol of `u ↦ sym(DuP)` stays elliptic for every
//! invertible `P`: Legendre-Hadamard over real pairs and the complex
//! rank-one condition.
//!
//! cargo run --release --example ellipticity

use kornlab::analysis::{complex_ellipticity_check, lh_check};
use kornlab::geometry::{Aabb, Rotation3};
use kornlab::thm1::{Theorem1, Theorem1Params};
use nalgebra::{Matrix3, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let mut params = Theorem1Params::new(Aabb::cube(Point3::origin(), 0.25), vec![2], 2.0, 1e-2);
    params.packing.mc_samples = 0;
    let t = Theorem1::build(&params)?;

    let mut fields = vec![("identity", Matrix3::identity())];
    for x in [Point3::new(0.03, 0.05, 0.07), Point3::new(0.2, 0.1, 0.15)] {
        fields.push(("first construction", t.coefficient(2, &x)?.0));
    }
    fields.push(("random rotation", *Rotation3::random(&mut r).matrix()));

    println!("{:<20} {:>12} {:>14} {:>14} {:>14}", "P", "LH ratio", "lambda_min/2", "complex min", "certified");
    for (name, p) in fields {
        let lh = lh_check(&p, 10_000, &mut r)?;
        let c = complex_ellipticity_check(&p, 10_000, &mut r)?;
        println!(
            "{name:<20} {:>12.9} {:>14.6e} {:>14.6e} {:>14.6e}",
            lh.min_ratio,
            0.5 * lh.lambda_min,
            c.min_norm,
            c.certified_lower
        );
    }
    Ok(())
}

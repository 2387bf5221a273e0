//! Rotation-valued coefficients: every orthonormal gradient frame is turned
//! into a rotation `P` with `DuP = sJ`, and the pipeline checks the rescaled
//! copies on an axis-aligned covering.
//!
//! cargo run --release --example theorem2_rotations

use kornlab::geometry::Aabb;
use kornlab::thm1::skew_j;
use kornlab::thm2::{frame_to_rotation, lipschitz_estimate, random_frame, thm2_pipeline, SyntheticFrameField, Theorem2Params};
use nalgebra::{Matrix3, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (d1, d2) = random_frame(&mut r);
        let p = frame_to_rotation(&d1, &d2)?;
        let s = 0.7;
        let du = Matrix3::from_rows(&[(d1 * s).transpose(), (d2 * s).transpose(), Matrix3::zeros().row(0).into_owned()]);
        worst = worst.max((du * p.matrix() - skew_j() * s).norm());
    }
    println!("max |Du P - sJ| over 10^4 random frames: {worst:.2e}");
    println!("Lipschitz estimate of the frame-to-rotation map: {:.3}", lipschitz_estimate(&mut r, 2000, 1e-6));

    let params = Theorem2Params::new(Aabb::cube(Point3::origin(), 0.25), vec![1, 2, 4], 2.0);
    let (_, report) = thm2_pipeline(&params, SyntheticFrameField::new(4, 1), 100_000, 1)?;
    println!("\n  n   sym max    sym bound   SO(3) defect   sup|u|   bound");
    for rec in &report.records {
        println!(
            "{:>3}   {:.1e}    {:.1e}     {:.1e}        {:.4}   {:.4}",
            rec.n, rec.sym_residual_max, rec.sym_residual_bound, rec.so3_residual_max, rec.sup_norm_observed, rec.sup_norm_bound
        );
    }
    println!("failures: {:?}", report.failures());
    Ok(())
}

//! Cosserat energy of a deformation and a microrotation field sampled on a
//! grid: zero at the identity, unchanged under rigid rotations, and the
//! elastic part tied to the coercivity form with `P = R̄ᵀ`.
//!
//! cargo run --release --example cosserat_energy

use kornlab::analysis::{cosserat_energy, four_a_identity, CosseratParams, SampleGrid};
use kornlab::geometry::{Aabb, Rotation3};
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SampleGrid::new(Aabb::unit(), [21, 21, 21])?;
    let pts = grid.points();
    let params = CosseratParams { l_c: 0.2, ..CosseratParams::default() };

    let phi: Vec<Vector3<f64>> = pts
        .iter()
        .map(|x| x.coords + 0.05 * Vector3::new((3.0 * x.y).sin(), x.x * x.z, (2.0 * x.x).cos()))
        .collect();
    let rbar = pts
        .iter()
        .map(|x| Ok(*Rotation3::from_axis_angle(&Vector3::new(0.0, 1.0, 1.0), 0.4 * x.x + 0.2 * x.y)?.matrix()))
        .collect::<Result<Vec<Matrix3<f64>>, kornlab::error::GeometryError>>()?;

    let e = cosserat_energy(&grid, &phi, &rbar, &params)?;
    println!("energy {:.8e} = elastic {:.8e} + curvature {:.8e}", e.total, e.elastic, e.curvature);

    let id: Vec<_> = pts.iter().map(|x| x.coords).collect();
    let e0 = cosserat_energy(&grid, &id, &vec![Matrix3::identity(); grid.len()], &params)?;
    println!("identity configuration: {}", e0.total);

    let mut r = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let q = *Rotation3::random(&mut r).matrix();
        let phi_q: Vec<_> = phi.iter().map(|p| q * p).collect();
        let rbar_q: Vec<_> = rbar.iter().map(|m| q * m).collect();
        let eq = cosserat_energy(&grid, &phi_q, &rbar_q, &params)?;
        println!("after a rigid rotation: relative change {:.1e}", (eq.total - e.total).abs() / e.total);
    }

    let (lhs, rhs) = four_a_identity(&grid, &phi, &rbar)?;
    println!("|R^T F + F^T R|^2 = {lhs:.12e}\n4|sym(F R^T)|^2   = {rhs:.12e}");
    Ok(())
}

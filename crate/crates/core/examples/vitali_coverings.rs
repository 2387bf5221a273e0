//! Axis-aligned and rotated cube coverings of a box, their residual
//! certificates and a JSON round trip.
//!
//! cargo run --release --example vitali_coverings

use kornlab::geometry::{
    axis_grid_cover, default_base_rotation, rotated_vitali_cover, Aabb, Covering, Location, PackingOptions,
};
use nalgebra::Point3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = Aabb::unit();
    let rotation = default_base_rotation();
    println!("base rotation margin {:.4}", rotation.margin());

    let axis = axis_grid_cover(&region, 0.1)?;
    println!(
        "axis grid: {} cubes, residual {:.1e} (exact: {})",
        axis.cube_count().unwrap_or(0),
        axis.residual_measure_bound(),
        axis.residual_is_exact()
    );

    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let rot = rotated_vitali_cover(&region, &rotation, 0.1, eps, &PackingOptions::default())?;
        let cert = rot.certificate().expect("certificate requested");
        println!(
            "rotated, eps={eps:.0e}: certified covered fraction >= {:.6}, Monte Carlo {:.6} ± {:.1e}",
            rot.covered_fraction_lower(),
            cert.covered_fraction,
            cert.sigma
        );
    }

    let rot = rotated_vitali_cover(&region, &rotation, 0.1, 1e-3, &PackingOptions::default())?;
    let x = Point3::new(0.37, 0.52, 0.61);
    match rot.locate(&x)? {
        Location::Cube { cube, .. } => println!("{x} lies in a cube of edge {:.4e}", cube.edge()),
        Location::Residual => println!("{x} lies in the residual set"),
    }

    let text = rot.to_json()?;
    let back = Covering::from_json(&text)?;
    assert_eq!(back.to_json()?, text);
    println!("JSON round trip: {} bytes, checksum verified", text.len());

    // any edit is caught by the embedded checksum
    let tampered = text.replacen("\"edge_bound\": 0.1", "\"edge_bound\": 0.2", 1);
    println!("tampered file: {}", Covering::from_json(&tampered).unwrap_err());
    Ok(())
}

use kornlab::analysis::{cosserat_energy, lh_form, loglog_fit, CosseratParams, SampleGrid};
use kornlab::geometry::{Aabb, OrientedCube, Rotation3};
use kornlab::thm1::{build_p_point, dist_to_cube_boundary, skew_j};
use kornlab::thm2::frame_to_rotation;
use nalgebra::{Matrix3, Point3, Vector3};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-range..range).prop_map(Vector3::from)
}

fn rotation() -> impl Strategy<Value = Rotation3> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero quaternion", |q| q.iter().map(|v| v * v).sum::<f64>() > 1e-2)
        .prop_map(|q| {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            Rotation3::from_quaternion(q.map(|v| v / n)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn coefficient_has_unit_determinant(a in vec3(3.0), b in vec3(3.0)) {
        prop_assume!(a.cross(&b).norm() > 1e-2 * a.norm() * b.norm() && a.norm() > 1e-2 && b.norm() > 1e-2);
        let p = build_p_point(&a, &b).unwrap();
        let du = Matrix3::from_rows(&[a.transpose(), b.transpose(), Vector3::zeros().transpose()]);
        prop_assert!((p.determinant() - 1.0).abs() < 1e-10);
        prop_assert!((du * p - skew_j()).abs().max() < 1e-9 * p.norm().max(1.0));
    }

    #[test]
    fn rotated_frames_map_to_a_multiple_of_j(r in rotation(), s in -5.0f64..5.0) {
        let (d1, d2) = (r.axis(0), r.axis(1));
        let p = frame_to_rotation(&d1, &d2).unwrap();
        let pm = p.matrix();
        prop_assert!((pm.transpose() * pm - Matrix3::identity()).abs().max() < 1e-12);
        prop_assert!((pm.determinant() - 1.0).abs() < 1e-12);
        let du = Matrix3::from_rows(&[(d1 * s).transpose(), (d2 * s).transpose(), Vector3::zeros().transpose()]);
        prop_assert!((du * pm - skew_j() * s).abs().max() < 1e-12 * s.abs().max(1.0));
    }

    #[test]
    fn legendre_hadamard_lower_bound(
        entries in prop::array::uniform9(-2.0f64..2.0),
        xi in vec3(1.0),
        eta in vec3(1.0),
    ) {
        let p = Matrix3::from_row_slice(&entries);
        prop_assume!(p.determinant().abs() > 1e-3);
        let lam = (p * p.transpose()).symmetric_eigenvalues().min();
        let form = lh_form(&p, &xi, &eta);
        let bound = 0.5 * lam * xi.norm_squared() * eta.norm_squared();
        prop_assert!(form >= bound * (1.0 - 1e-9) - 1e-14, "{form} < {bound}");
    }

    #[test]
    fn distance_is_bounded_by_the_half_edge(r in rotation(), y in prop::array::uniform3(-0.999f64..0.999), h in 0.01f64..2.0) {
        let cube = OrientedCube::new(Point3::new(0.3, -1.0, 2.0), h, r).unwrap();
        let x = cube.center + r.matrix() * Vector3::from(y) * h;
        let d = dist_to_cube_boundary(&cube, &x).unwrap();
        prop_assert!(d.value > 0.0 && d.value <= h * (1.0 + 1e-12));
        prop_assert!((d.gradient.norm() - 1.0).abs() < 1e-12);
        // Lipschitz: moving by δ changes the distance by at most δ
        let step = Vector3::new(1e-3, -2e-3, 5e-4) * h;
        let d2 = dist_to_cube_boundary(&cube, &(x + step));
        if let Ok(d2) = d2 {
            prop_assert!((d2.value - d.value).abs() <= step.norm() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn loglog_fit_recovers_power_laws(slope in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(slope)).collect();
        let (s, b) = loglog_fit(&xs, &ys);
        prop_assert!((s - slope).abs() < 1e-10);
        prop_assert!((b - c.ln()).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cosserat_energy_is_frame_indifferent(q in rotation(), r0 in rotation(), a in -0.3f64..0.3) {
        let grid = SampleGrid::new(Aabb::unit(), [5, 5, 5]).unwrap();
        let pts = grid.points();
        let phi: Vec<Vector3<f64>> = pts
            .iter()
            .map(|x| x.coords + Vector3::new((x.y * 3.0).sin(), x.z * x.x, (x.x + x.y).cos()) * a)
            .collect();
        let rbar: Vec<Matrix3<f64>> = pts
            .iter()
            .map(|x| Rotation3::from_axis_angle(&Vector3::new(1.0, -1.0, 2.0), a * (x.x + 2.0 * x.z)).unwrap().matrix() * r0.matrix())
            .collect();
        let params = CosseratParams::default();
        let base = cosserat_energy(&grid, &phi, &rbar, &params).unwrap().total;
        let qm = q.matrix();
        let phi_q: Vec<_> = phi.iter().map(|v| qm * v).collect();
        let rbar_q: Vec<_> = rbar.iter().map(|m| qm * m).collect();
        let turned = cosserat_energy(&grid, &phi_q, &rbar_q, &params).unwrap().total;
        prop_assert!((turned - base).abs() <= 1e-10 * base.max(1.0), "{turned} vs {base}");
    }
}

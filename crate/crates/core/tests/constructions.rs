use kornlab::geometry::{Aabb, DecompositionMode};
use kornlab::thm1::{build_p_point, skew_j, PointTag, Theorem1, Theorem1Params};
use kornlab::thm2::{thm2_pipeline, SyntheticFrameField, Theorem2Params, SYM_QUALITY_CONSTANT};
use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn construction(mode: DecompositionMode) -> Theorem1 {
    let mut p = Theorem1Params::new(Aabb::cube(Point3::origin(), 0.25), vec![1, 3, 5], 2.0, 1e-2).with_mode(mode);
    p.packing.mc_samples = 0;
    Theorem1::build(&p).unwrap()
}

/// The stored gradient equals a central difference of the stored values
/// whenever both neighbours sit on the same linear piece.
#[test]
fn witness_gradient_matches_finite_differences() {
    let t = construction(DecompositionMode::Single);
    let mut g = ChaCha8Rng::seed_from_u64(21);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 2000 {
        let x = Point3::from(Vector3::from_fn(|_, _| g.random_range(0.01..0.24)));
        let b = t.eval_bundle(5, &x).unwrap();
        if b.tag != PointTag::Interior {
            continue;
        }
        let mut fd = Matrix3::zeros();
        let mut same_piece = true;
        for k in 0..3 {
            let e = Vector3::ith(k, h);
            let (bp, bm) = (t.eval_bundle(5, &(x + e)).unwrap(), t.eval_bundle(5, &(x - e)).unwrap());
            same_piece &= bp.tag == PointTag::Interior && bm.tag == PointTag::Interior && bp.du == b.du && bm.du == b.du;
            fd.set_column(k, &((bp.u - bm.u) / (2.0 * h)));
        }
        if !same_piece {
            continue;
        }
        assert!((fd - b.du).abs().max() < 1e-6, "{fd} vs {}", b.du);
        checked += 1;
    }
}

#[test]
fn coefficient_cancels_the_symmetric_part_at_covered_points() {
    for mode in [DecompositionMode::Single, DecompositionMode::Slabs] {
        let t = construction(mode);
        let mut g = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let x = Point3::from(Vector3::from_fn(|_, _| g.random_range(0.0..0.25)));
            for n in [1, 3, 5] {
                let b = t.eval_bundle(n, &x).unwrap();
                match b.tag {
                    PointTag::Interior => {
                        assert!(b.sym2().abs().max() <= 1e-12);
                        assert!((b.p.determinant() - 1.0).abs() <= 1e-12);
                        // DuP is a multiple of J: the witness sees only the skew part
                        let s = b.dup[(0, 1)];
                        assert!((b.dup - skew_j() * s).abs().max() <= 1e-12);
                    }
                    PointTag::Inactive => assert_eq!(b.u, Vector3::zeros()),
                    _ => {}
                }
            }
        }
    }
}

#[test]
fn slab_mode_shares_one_coefficient_field() {
    let t = construction(DecompositionMode::Slabs);
    let mut g = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..2000 {
        let x = Point3::from(Vector3::from_fn(|_, _| g.random_range(0.0..0.25)));
        let p1 = t.coefficient(1, &x).unwrap();
        assert_eq!(p1, t.coefficient(3, &x).unwrap());
        assert_eq!(p1, t.coefficient(5, &x).unwrap());
        // exactly one level is active at each point
        let active = [1, 3, 5]
            .iter()
            .filter(|&&n| t.eval_bundle(n, &x).unwrap().tag != PointTag::Inactive)
            .count();
        assert_eq!(active, 1);
    }
}

#[test]
fn coefficient_inverts_the_gradient_frame() {
    let mut g = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let a = Vector3::from_fn(|_, _| g.random_range(-1.0..1.0));
        let b = Vector3::from_fn(|_, _| g.random_range(-1.0..1.0));
        if a.cross(&b).norm() < 1e-2 {
            continue;
        }
        let p = build_p_point(&a, &b).unwrap();
        let du = Matrix3::from_rows(&[a.transpose(), b.transpose(), Vector3::zeros().transpose()]);
        let dup = du * p;
        assert!((dup - skew_j()).abs().max() < 1e-9 * p.norm());
        assert!((p.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn imperfect_frames_stay_within_the_quality_budget() {
    let eta = 1e-4;
    let map = SyntheticFrameField::perturbed(3, 4, eta);
    let mut params = Theorem2Params::new(Aabb::unit(), vec![1, 2], 2.0);
    params.sym_tolerance = 1.0;
    let (t, report) = thm2_pipeline(&params, map, 50_000, 4).unwrap();
    assert!((t.eta() - eta).abs() < 1e-12);
    for r in &report.records {
        assert!(r.sym_residual_max > 0.0, "perturbed frames are not exactly orthonormal");
        assert!(r.sym_residual_max <= SYM_QUALITY_CONSTANT * eta * r.part_measure.powf(-0.5) * (1.0 + 1e-9));
        assert!(r.so3_residual_max <= 1e-12);
    }
    assert!(report.passed(), "{:?}", report.failures());
}

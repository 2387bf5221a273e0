use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::error::ConstructionError;
use crate::geometry::Rotation3;

/// Tolerance of [`frame_to_rotation`] on `|d₁| = |d₂| = 1`, `d₁·d₂ = 0`.
pub const ORTHO_TOL: f64 = 1e-9;

/// `max(||d₁| − 1|, ||d₂| − 1|, |d₁·d₂|)`.
pub fn orthonormality_defect(d1: &Vector3<f64>, d2: &Vector3<f64>) -> f64 {
    (d1.norm() - 1.0).abs().max((d2.norm() - 1.0).abs()).max(d1.dot(d2).abs())
}

/// Target frame: columns `(0,1,0)`, `(−1,0,0)` and their cross product `e₃`.
fn target_frame() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

/// The rotation `P` with `Pᵀd₁ = (0,1,0)` and `Pᵀd₂ = (−1,0,0)`, for an
/// orthonormal pair. With `Du` rows `(s d₁, s d₂, 0)` this gives `DuP = sJ`.
pub fn frame_to_rotation(d1: &Vector3<f64>, d2: &Vector3<f64>) -> Result<Rotation3, ConstructionError> {
    let defect = orthonormality_defect(d1, d2);
    if !(defect <= ORTHO_TOL) {
        return Err(ConstructionError::NotOrthonormal { defect });
    }
    frame_to_rotation_projected(d1, d2)
}

/// [`frame_to_rotation`] for pairs that are only approximately orthonormal:
/// the pair is first Gram–Schmidt orthonormalized, so the result is always a
/// rotation. Fails only for (nearly) parallel or vanishing inputs.
pub fn frame_to_rotation_projected(d1: &Vector3<f64>, d2: &Vector3<f64>) -> Result<Rotation3, ConstructionError> {
    let n1 = d1.norm();
    let a1 = d1 / n1;
    let w = d2 - a1 * a1.dot(d2);
    let nw = w.norm();
    let cross = n1 * nw;
    if !(n1 > 0.0 && cross >= 1e-9 * d2.norm().max(1.0)) || !cross.is_finite() {
        return Err(ConstructionError::DegenerateFrame { cross_norm: cross });
    }
    let a2 = w / nw;
    let a = Matrix3::from_columns(&[a1, a2, a1.cross(&a2)]);
    Ok(Rotation3::from_matrix_unchecked(a * target_frame().transpose()))
}

/// Random exactly-orthonormal pair (first two columns of a Haar rotation).
pub fn random_frame<R: Rng + ?Sized>(r: &mut R) -> (Vector3<f64>, Vector3<f64>) {
    let m = Rotation3::random(r);
    (m.axis(0), m.axis(1))
}

/// Largest observed `‖P(d + δ) − P(d)‖_F / |δ|` over `samples` random
/// orthonormal frames and perturbations of size `delta`.
pub fn lipschitz_estimate<R: Rng + ?Sized>(r: &mut R, samples: usize, delta: f64) -> f64 {
    let mut k: f64 = 0.0;
    for _ in 0..samples {
        let (d1, d2) = random_frame(r);
        let e1 = Vector3::from_fn(|_, _| r.random_range(-1.0f64..1.0));
        let e2 = Vector3::from_fn(|_, _| r.random_range(-1.0f64..1.0));
        let size = (e1.norm_squared() + e2.norm_squared()).sqrt();
        if size == 0.0 {
            continue;
        }
        let (e1, e2) = (e1 * (delta / size), e2 * (delta / size));
        let p = frame_to_rotation_projected(&d1, &d2).expect("orthonormal frame");
        let pp = frame_to_rotation_projected(&(d1 + e1), &(d2 + e2)).expect("small perturbation");
        k = k.max((pp.matrix() - p.matrix()).norm() / delta);
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thm1::skew_j;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn target_frame_gives_identity() {
        let p = frame_to_rotation(&Vector3::y(), &-Vector3::x()).unwrap();
        assert_eq!(*p.matrix(), Matrix3::identity());
    }

    #[test]
    fn standard_frame_maps_to_target() {
        let p = frame_to_rotation(&Vector3::x(), &Vector3::y()).unwrap();
        let pt = p.matrix().transpose();
        assert_eq!(pt * Vector3::x(), Vector3::y());
        assert_eq!(pt * Vector3::y(), -Vector3::x());
        assert_eq!(pt * Vector3::z(), Vector3::z());
    }

    #[test]
    fn rejects_non_unit_frame() {
        let err = frame_to_rotation(&Vector3::x(), &(Vector3::y() * 2.0)).unwrap_err();
        assert!(matches!(err, ConstructionError::NotOrthonormal { defect } if (defect - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_frames_give_skew_products() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (d1, d2) = random_frame(&mut r);
            let s = r.random_range(0.1..10.0);
            let p = frame_to_rotation(&d1, &d2).unwrap();
            let du = Matrix3::from_rows(&[(d1 * s).transpose(), (d2 * s).transpose(), Vector3::zeros().transpose()]);
            assert!((du * p.matrix() - skew_j() * s).abs().max() <= 1e-12 * s.max(1.0));
            let m = p.matrix();
            assert!((m.transpose() * m - Matrix3::identity()).abs().max() <= 1e-12);
            assert!((m.determinant() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn lipschitz_constant_is_moderate() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let k = lipschitz_estimate(&mut r, 500, 1e-6);
        assert!(k > 0.5 && k < 10.0, "K = {k}");
    }
}

use nalgebra::{Matrix3, Vector3};

use crate::error::ConstructionError;
use crate::geometry::Rotation3;

/// The skew matrix with `J₁₂ = 1`, `J₂₁ = −1`.
pub fn skew_j() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// Smallest admissible `‖a × b‖`.
pub const MIN_CROSS: f64 = 1e-9;

/// `v = (a × b)/‖a × b‖²`, so that `v ⊥ a, b` and `det(a; b; v) = 1`.
pub fn build_v(a: &Vector3<f64>, b: &Vector3<f64>) -> Result<Vector3<f64>, ConstructionError> {
    let c = a.cross(b);
    let n2 = c.norm_squared();
    let n = n2.sqrt();
    if !(n >= MIN_CROSS) {
        return Err(ConstructionError::DegenerateFrame { cross_norm: n });
    }
    Ok(c / n2)
}

/// Rows `(−∇u², ∇u¹, v)` of the matrix inverted by [`build_p_point`].
pub fn frame_matrix(grad_u1: &Vector3<f64>, grad_u2: &Vector3<f64>) -> Result<Matrix3<f64>, ConstructionError> {
    let a = -grad_u2;
    let v = build_v(&a, grad_u1)?;
    Ok(Matrix3::from_rows(&[a.transpose(), grad_u1.transpose(), v.transpose()]))
}

/// Coefficient matrix of the first counterexample at a point where the two
/// distance fields have gradients `grad_u1` and `grad_u2`:
/// `P = (−∇u²; ∇u¹; v)⁻¹`. Then `det P = 1` and
/// `(∇u¹; ∇u²; 0)·P = J`.
pub fn build_p_point(grad_u1: &Vector3<f64>, grad_u2: &Vector3<f64>) -> Result<Matrix3<f64>, ConstructionError> {
    let m = frame_matrix(grad_u1, grad_u2)?;
    // det m = 1 up to rounding; dividing by the computed determinant keeps det P = 1
    let det = m.determinant();
    let adj = Matrix3::from_fn(|i, j| {
        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
        m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
    });
    Ok(adj / det)
}

/// Bounds attached to a base rotation: every gradient pair that occurs off
/// ridges is `(±eᵢ, ±R eⱼ)`, so `P` takes at most 36 values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameBounds {
    /// `max ‖P‖_op` over the 36 frames.
    pub p_op_max: f64,
    /// `min |v|` and `max |v|` over the 36 frames.
    pub v_norm_min: f64,
    pub v_norm_max: f64,
}

/// Enumerates the frames `{±eᵢ} × {±R eⱼ}`.
pub fn frame_bounds(rotation: &Rotation3) -> Result<FrameBounds, ConstructionError> {
    let mut out = FrameBounds {
        p_op_max: 0.0,
        v_norm_min: f64::INFINITY,
        v_norm_max: 0.0,
    };
    for i in 0..3 {
        for j in 0..3 {
            for si in [1.0, -1.0] {
                for sj in [1.0, -1.0] {
                    let g1 = Vector3::ith(i, si);
                    let g2 = rotation.axis(j) * sj;
                    let p = build_p_point(&g1, &g2)?;
                    let v = build_v(&-g2, &g1)?;
                    out.p_op_max = out.p_op_max.max(op_norm(&p));
                    out.v_norm_min = out.v_norm_min.min(v.norm());
                    out.v_norm_max = out.v_norm_max.max(v.norm());
                }
            }
        }
    }
    Ok(out)
}

/// `‖P‖_op ≤ √2/m` for a rotation with margin `m`.
///
/// `M Mᵀ` has eigenvalues `1 ± cos θ` and `|v|² ≥ 1`, where `θ` is the angle
/// between the two gradients, and `‖g₁ ∓ g₂‖ ≥ m` gives `|cos θ| ≤ 1 − m²/2`.
pub fn p_op_bound(margin: f64) -> f64 {
    std::f64::consts::SQRT_2 / margin
}

/// `1 ≤ |v| ≤ 1/(m·√(1 − m²/4))` for a rotation with margin `m`.
pub fn v_norm_bounds(margin: f64) -> (f64, f64) {
    (1.0, 1.0 / (margin * (1.0 - 0.25 * margin * margin).sqrt()))
}

/// Largest singular value.
pub fn op_norm(m: &Matrix3<f64>) -> f64 {
    m.singular_values().max()
}

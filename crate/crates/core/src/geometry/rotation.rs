use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

use crate::error::GeometryError;

/// Margin required by [`make_base_rotation`].
pub const MIN_MARGIN: f64 = 1e-3;

/// A proper rotation of ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3 {
    matrix: Matrix3<f64>,
}

impl Rotation3 {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    /// Accepts `m` if `mᵀm = I` and `det m = 1`, both within 1e-12.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !(defect <= 1e-12 && (det - 1.0).abs() <= 1e-12) {
            return Err(GeometryError::NotARotation { defect, det });
        }
        Ok(Self { matrix: m })
    }

    /// Builds the rotation from a matrix whose columns are known to be an
    /// orthonormal right-handed frame. Callers guarantee the invariant.
    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self { matrix: m }
    }

    /// Right-handed rotation by `angle` radians about `axis` (normalized here).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self, GeometryError> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeometryError::InvalidAxis);
        }
        if !angle.is_finite() {
            return Err(GeometryError::InvalidAngle);
        }
        let k = axis / norm;
        // Rodrigues
        let kx = k.cross_matrix();
        let m = Matrix3::identity() + kx * angle.sin() + kx * kx * (1.0 - angle.cos());
        Ok(Self { matrix: m })
    }

    /// Unit quaternion `[w, x, y, z]`.
    pub fn from_quaternion(q: [f64; 4]) -> Result<Self, GeometryError> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if !((norm - 1.0).abs() <= 1e-9) {
            return Err(GeometryError::Integrity(format!(
                "quaternion norm {norm} is not 1"
            )));
        }
        let m = UnitQuaternion::from_quaternion(quat).to_rotation_matrix();
        Ok(Self {
            matrix: m.into_inner(),
        })
    }

    /// Haar-distributed rotation (normalized Gaussian quaternion).
    pub fn random<R: rand::Rng + ?Sized>(r: &mut R) -> Self {
        use rand_distr::StandardNormal;
        loop {
            let q: [f64; 4] = std::array::from_fn(|_| r.sample(StandardNormal));
            let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 1e-6 {
                let quat = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
                return Self {
                    matrix: quat.to_rotation_matrix().into_inner(),
                };
            }
        }
    }

    /// `[w, x, y, z]` with `w >= 0`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.matrix);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// `R e_i`.
    pub fn axis(&self, i: usize) -> Vector3<f64> {
        self.matrix.column(i).into_owned()
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == Matrix3::identity()
    }

    /// `min ‖R eᵢ ∓ eⱼ‖` over the 18 index/sign combinations.
    pub fn margin(&self) -> f64 {
        rotation_margin(&self.matrix)
    }

    /// Half-width factors `Σ_c |R_mc|`: a cube of edge `a` with this
    /// orientation spans `a·w_m` along the world axis `m`.
    pub fn extent_factors(&self) -> Vector3<f64> {
        Vector3::from_fn(|m, _| (0..3).map(|c| self.matrix[(m, c)].abs()).sum())
    }
}

/// Minimum of `‖R eᵢ − s eⱼ‖` over `i, j ∈ {1,2,3}`, `s = ±1`.
pub fn rotation_margin(r: &Matrix3<f64>) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..3 {
        let col = r.column(i);
        for j in 0..3 {
            for s in [1.0, -1.0] {
                let mut d = col.into_owned();
                d[j] -= s;
                m = m.min(d.norm());
            }
        }
    }
    m
}

/// Base rotation for the two-covering construction. Fails with
/// [`GeometryError::MarginViolation`] when some `R eᵢ` lies within
/// [`MIN_MARGIN`] of `±eⱼ`.
pub fn make_base_rotation(axis: &Vector3<f64>, angle: f64) -> Result<Rotation3, GeometryError> {
    let r = Rotation3::from_axis_angle(axis, angle)?;
    let margin = r.margin();
    if margin < MIN_MARGIN {
        return Err(GeometryError::MarginViolation {
            margin,
            required: MIN_MARGIN,
        });
    }
    Ok(r)
}

/// Axis `(1,2,3)/√14`, angle 1 rad.
pub fn default_base_rotation() -> Rotation3 {
    make_base_rotation(&Vector3::new(1.0, 2.0, 3.0), 1.0).expect("default rotation has margin")
}

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{Covering, Location, OrientedCube};

/// Default ridge tolerance, relative to the cube half-edge.
pub const RIDGE_REL_TOL: f64 = 1e-9;

/// Classification of an evaluation point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointTag {
    /// Covered, with a unique nearest face.
    Interior,
    /// Covered, but two nearest faces are (almost) equidistant.
    Ridge,
    /// Not covered by the finite covering.
    Residual,
    /// Outside the support of the witness under consideration.
    Inactive,
}

impl PointTag {
    /// Worst of two tags, in the order Interior < Ridge < Residual.
    pub fn combine(self, other: PointTag) -> PointTag {
        self.max(other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceSample {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub tag: PointTag,
}

impl DistanceSample {
    pub fn residual() -> Self {
        Self {
            value: 0.0,
            gradient: Vector3::zeros(),
            tag: PointTag::Residual,
        }
    }
}

/// `dist(x, ∂Q)` and its gradient, the inward normal of the nearest face.
pub fn dist_to_cube_boundary(cube: &OrientedCube, x: &Point3<f64>) -> Result<DistanceSample, GeometryError> {
    dist_with_tol(cube, x, RIDGE_REL_TOL)
}

pub(crate) fn dist_with_tol(
    cube: &OrientedCube,
    x: &Point3<f64>,
    ridge_rel_tol: f64,
) -> Result<DistanceSample, GeometryError> {
    let h = cube.half_edge;
    let y = cube.local(x);
    let d = y.map(|c| h - c.abs());
    if d.min() < -1e-12 * h {
        return Err(GeometryError::OutsideCube);
    }
    let (mut first, mut second) = (0usize, usize::MAX);
    for m in 1..3 {
        if d[m] < d[first] {
            second = first;
            first = m;
        } else if second == usize::MAX || d[m] < d[second] {
            second = m;
        }
    }
    if second == usize::MAX {
        second = 1;
    }
    let sign = if y[first] > 0.0 { -1.0 } else { 1.0 };
    let gradient = cube.orientation.axis(first) * sign;
    let ridge = d[second] - d[first] < ridge_rel_tol * h;
    Ok(DistanceSample {
        value: d[first].max(0.0),
        gradient,
        tag: if ridge { PointTag::Ridge } else { PointTag::Interior },
    })
}

/// `x ↦ dist(x, ∂Q)` for the cube `Q` of a covering containing `x`, and 0 on
/// the residual set.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    covering: Covering,
    ridge_rel_tol: f64,
}

impl DistanceField {
    pub fn new(covering: Covering) -> Self {
        Self {
            covering,
            ridge_rel_tol: RIDGE_REL_TOL,
        }
    }

    pub fn covering(&self) -> &Covering {
        &self.covering
    }

    pub fn eval(&self, x: &Point3<f64>) -> Result<DistanceSample, GeometryError> {
        match self.covering.locate(x)? {
            Location::Cube { cube, .. } => dist_with_tol(&cube, x, self.ridge_rel_tol),
            Location::Residual => Ok(DistanceSample::residual()),
        }
    }

    /// `max_x dist(x, ∂Q) = ` largest half-edge.
    pub fn sup_bound(&self) -> f64 {
        self.covering.max_half_edge()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{default_base_rotation, Rotation3};

    #[test]
    fn unit_cube_near_first_face() {
        let q = OrientedCube::axis_aligned(Point3::new(0.5, 0.5, 0.5), 0.5).unwrap();
        let s = dist_to_cube_boundary(&q, &Point3::new(0.1, 0.5, 0.5)).unwrap();
        assert!((s.value - 0.1).abs() < 1e-15);
        assert_eq!(s.gradient, Vector3::x());
        assert_eq!(s.tag, PointTag::Interior);
    }

    #[test]
    fn centre_is_a_ridge() {
        let q = OrientedCube::axis_aligned(Point3::new(0.5, 0.5, 0.5), 0.5).unwrap();
        let s = dist_to_cube_boundary(&q, &q.center).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.tag, PointTag::Ridge);
    }

    #[test]
    fn rotated_cube_matches_axis_case_in_cube_frame() {
        let r = default_base_rotation();
        let q = OrientedCube::new(Point3::new(0.3, 0.4, 0.5), 0.2, r).unwrap();
        let x = q.center + r.axis(2) * 0.1;
        let s = dist_to_cube_boundary(&q, &x).unwrap();
        // same point in the cube frame
        let axis = OrientedCube::new(Point3::origin(), 0.2, Rotation3::identity()).unwrap();
        let t = dist_to_cube_boundary(&axis, &Point3::new(0.0, 0.0, 0.1)).unwrap();
        assert!((s.value - 0.1).abs() < 1e-15);
        assert!((s.value - t.value).abs() < 1e-15);
        assert!((s.gradient + r.axis(2)).norm() < 1e-15);
        assert!((r.matrix() * t.gradient - s.gradient).norm() < 1e-15);
    }

    #[test]
    fn outside_point_is_rejected() {
        let q = OrientedCube::axis_aligned(Point3::new(0.5, 0.5, 0.5), 0.5).unwrap();
        assert_eq!(
            dist_to_cube_boundary(&q, &Point3::new(1.2, 0.5, 0.5)),
            Err(GeometryError::OutsideCube)
        );
    }
}

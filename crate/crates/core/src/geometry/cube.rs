use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::rotation::Rotation3;
use crate::error::GeometryError;

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxDoc", into = "BoxDoc")]
pub struct Aabb {
    lo: Point3<f64>,
    hi: Point3<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoxDoc {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl TryFrom<BoxDoc> for Aabb {
    type Error = GeometryError;
    fn try_from(d: BoxDoc) -> Result<Self, Self::Error> {
        Aabb::new(Point3::from(d.lo), Point3::from(d.hi))
    }
}

impl From<Aabb> for BoxDoc {
    fn from(b: Aabb) -> Self {
        BoxDoc {
            lo: b.lo.coords.into(),
            hi: b.hi.coords.into(),
        }
    }
}

impl Aabb {
    pub fn new(lo: Point3<f64>, hi: Point3<f64>) -> Result<Self, GeometryError> {
        let ok = (0..3).all(|m| lo[m].is_finite() && hi[m].is_finite() && hi[m] > lo[m]);
        if !ok {
            return Err(GeometryError::InvalidBox);
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self::cube(Point3::origin(), 1.0)
    }

    /// `[corner, corner + side]³`.
    pub fn cube(corner: Point3<f64>, side: f64) -> Self {
        Self::new(corner, corner + Vector3::repeat(side)).expect("positive side")
    }

    pub fn lo(&self) -> &Point3<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &Point3<f64> {
        &self.hi
    }

    pub fn sides(&self) -> Vector3<f64> {
        self.hi - self.lo
    }

    pub fn volume(&self) -> f64 {
        self.sides().product()
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.lo, &self.hi)
    }

    /// Length scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.sides().max()
    }

    pub fn contains(&self, x: &Point3<f64>, tol: f64) -> bool {
        (0..3).all(|m| x[m] >= self.lo[m] - tol && x[m] <= self.hi[m] + tol)
    }

    /// Open-interior containment with a margin: `lo + tol < x < hi - tol`.
    pub fn contains_strictly(&self, x: &Point3<f64>, tol: f64) -> bool {
        (0..3).all(|m| x[m] > self.lo[m] + tol && x[m] < self.hi[m] - tol)
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        std::array::from_fn(|c| {
            Point3::new(
                if c & 1 == 0 { self.lo.x } else { self.hi.x },
                if c & 2 == 0 { self.lo.y } else { self.hi.y },
                if c & 4 == 0 { self.lo.z } else { self.hi.z },
            )
        })
    }

    /// Point with coordinates `lo + t ⊙ sides` for `t ∈ [0,1]³`.
    pub fn at(&self, t: &Vector3<f64>) -> Point3<f64> {
        self.lo + self.sides().component_mul(t)
    }

    /// Whether the two boxes have disjoint interiors (up to `tol`).
    pub fn interiors_disjoint(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).any(|m| self.hi[m] <= other.lo[m] + tol || other.hi[m] <= self.lo[m] + tol)
    }
}

/// `center + orientation · [−h, h]³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedCube {
    pub center: Point3<f64>,
    pub half_edge: f64,
    pub orientation: Rotation3,
}

impl OrientedCube {
    pub fn new(center: Point3<f64>, half_edge: f64, orientation: Rotation3) -> Result<Self, GeometryError> {
        if !(half_edge > 0.0 && half_edge.is_finite()) {
            return Err(GeometryError::InvalidParameter {
                name: "half_edge",
                reason: format!("must be positive, got {half_edge}"),
            });
        }
        Ok(Self {
            center,
            half_edge,
            orientation,
        })
    }

    pub fn axis_aligned(center: Point3<f64>, half_edge: f64) -> Result<Self, GeometryError> {
        Self::new(center, half_edge, Rotation3::identity())
    }

    pub fn edge(&self) -> f64 {
        2.0 * self.half_edge
    }

    pub fn volume(&self) -> f64 {
        self.edge().powi(3)
    }

    /// Coordinates of `x` in the cube frame, `Rᵀ(x − c)`.
    pub fn local(&self, x: &Point3<f64>) -> Vector3<f64> {
        self.orientation.matrix().tr_mul(&(x - self.center))
    }

    pub fn contains(&self, x: &Point3<f64>, tol: f64) -> bool {
        self.local(x).amax() <= self.half_edge + tol
    }

    pub fn corners(&self) -> [Point3<f64>; 8] {
        let r = self.orientation.matrix();
        std::array::from_fn(|c| {
            let s = Vector3::new(
                if c & 1 == 0 { -1.0 } else { 1.0 },
                if c & 2 == 0 { -1.0 } else { 1.0 },
                if c & 4 == 0 { -1.0 } else { 1.0 },
            );
            self.center + r * (s * self.half_edge)
        })
    }

    /// Smallest axis-aligned box containing the cube.
    pub fn bounding_box(&self) -> Aabb {
        let ext = self.orientation.extent_factors() * self.half_edge;
        Aabb {
            lo: self.center - ext,
            hi: self.center + ext,
        }
    }

    pub fn inside_box(&self, region: &Aabb, tol: f64) -> bool {
        let bb = self.bounding_box();
        (0..3).all(|m| bb.lo[m] >= region.lo[m] - tol && bb.hi[m] <= region.hi[m] + tol)
    }

    /// Separating-axis test: true when some axis separates the two cubes up
    /// to an overlap of at most `tol`, i.e. the interiors are disjoint.
    pub fn interiors_disjoint(&self, other: &OrientedCube, tol: f64) -> bool {
        let a = self.orientation.matrix();
        let b = other.orientation.matrix();
        let t = other.center - self.center;
        let mut axes: Vec<Vector3<f64>> = Vec::with_capacity(15);
        for i in 0..3 {
            axes.push(a.column(i).into_owned());
            axes.push(b.column(i).into_owned());
        }
        for i in 0..3 {
            for j in 0..3 {
                let c = a.column(i).cross(&b.column(j));
                let n = c.norm();
                if n > 1e-9 {
                    axes.push(c / n);
                }
            }
        }
        axes.iter().any(|l| {
            let ra: f64 = self.half_edge * (0..3).map(|k| a.column(k).dot(l).abs()).sum::<f64>();
            let rb: f64 = other.half_edge * (0..3).map(|k| b.column(k).dot(l).abs()).sum::<f64>();
            t.dot(l).abs() >= ra + rb - tol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::default_base_rotation;

    #[test]
    fn box_rejects_degenerate_sides() {
        assert!(Aabb::new(Point3::origin(), Point3::new(1.0, 0.0, 1.0)).is_err());
        assert!(Aabb::new(Point3::origin(), Point3::new(1.0, f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn sat_detects_touching_and_overlapping_cubes() {
        let a = OrientedCube::axis_aligned(Point3::new(0.25, 0.25, 0.25), 0.25).unwrap();
        let b = OrientedCube::axis_aligned(Point3::new(0.75, 0.25, 0.25), 0.25).unwrap();
        let c = OrientedCube::axis_aligned(Point3::new(0.6, 0.25, 0.25), 0.25).unwrap();
        assert!(a.interiors_disjoint(&b, 1e-12));
        assert!(!a.interiors_disjoint(&c, 1e-12));
        let r = OrientedCube::new(Point3::new(0.25, 0.25, 0.25), 0.05, default_base_rotation()).unwrap();
        assert!(!a.interiors_disjoint(&r, 1e-12));
        let far = OrientedCube::new(Point3::new(0.9, 0.9, 0.9), 0.05, default_base_rotation()).unwrap();
        assert!(a.interiors_disjoint(&far, 1e-12));
    }

    #[test]
    fn bounding_box_contains_corners() {
        let c = OrientedCube::new(Point3::new(0.5, 0.5, 0.5), 0.1, default_base_rotation()).unwrap();
        let bb = c.bounding_box();
        for p in c.corners() {
            assert!(bb.contains(&p, 1e-15));
            assert!(c.contains(&p, 1e-12));
        }
    }
}

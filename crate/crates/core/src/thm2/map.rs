use std::io::Read;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::rotation::orthonormality_defect;
use crate::error::ConstructionError;
use crate::geometry::{Aabb, Rotation3};

/// Value and gradient rows of a map `u = (v₁, v₂, 0)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthoSample {
    pub value: Vector3<f64>,
    pub d1: Vector3<f64>,
    pub d2: Vector3<f64>,
}

/// A map on a cube whose gradient rows `∇v₁`, `∇v₂` are orthonormal almost
/// everywhere, up to [`OrthoMap::quality`]. Implementations are expected to
/// vanish on the boundary of [`OrthoMap::domain`]; that is not checked here.
pub trait OrthoMap: Send + Sync {
    /// Cube the map is defined on; the unit cube unless scaled.
    fn domain(&self) -> Aabb {
        Aabb::unit()
    }

    fn eval(&self, x: &Point3<f64>) -> OrthoSample;

    /// `c = sup |u|`.
    fn sup_norm(&self) -> f64;

    /// Largest orthonormality defect `η` of the gradient rows.
    fn quality(&self) -> f64;
}

impl<M: OrthoMap + ?Sized> OrthoMap for &M {
    fn domain(&self) -> Aabb {
        (**self).domain()
    }
    fn eval(&self, x: &Point3<f64>) -> OrthoSample {
        (**self).eval(x)
    }
    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }
    fn quality(&self) -> f64 {
        (**self).quality()
    }
}

/// Test double: the unit cube is split into `k³` cells, each carrying an
/// affine map with random orthonormal gradient rows. Values jump between
/// cells and do not vanish on the boundary, so this exercises the algebra
/// only.
#[derive(Clone, Debug)]
pub struct SyntheticFrameField {
    cells: usize,
    frames: Vec<(Vector3<f64>, Vector3<f64>)>,
    offsets: Vec<[f64; 2]>,
    sup: f64,
    quality: f64,
}

impl SyntheticFrameField {
    pub fn new(cells: usize, seed: u64) -> Self {
        Self::perturbed(cells, seed, 0.0)
    }

    /// Same as [`SyntheticFrameField::new`], with the second gradient row
    /// tilted so that the orthonormality defect is exactly `eta` in every cell.
    pub fn perturbed(cells: usize, seed: u64, eta: f64) -> Self {
        let cells = cells.max(1);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let count = cells.pow(3);
        let mut frames = Vec::with_capacity(count);
        let mut offsets = Vec::with_capacity(count);
        for _ in 0..count {
            let m = Rotation3::random(&mut r);
            // tilt d₂ towards d₁ so d₁·d₂ = eta while |d₂| stays 1
            let d2 = m.axis(1) * (1.0 - eta * eta).sqrt() + m.axis(0) * eta;
            frames.push((m.axis(0), d2));
            offsets.push([r.random_range(-0.05..0.05), r.random_range(-0.05..0.05)]);
        }
        let mut field = Self {
            cells,
            frames,
            offsets,
            sup: 0.0,
            quality: 0.0,
        };
        let h = 1.0 / cells as f64;
        for c in 0..count {
            let (d1, d2) = field.frames[c];
            field.quality = field.quality.max(orthonormality_defect(&d1, &d2));
            let lo = field.cell_lo(c);
            for corner in Aabb::cube(lo, h).corners() {
                let v = field.value_in(c, &corner);
                field.sup = field.sup.max(v.norm());
            }
        }
        field
    }

    fn cell_lo(&self, c: usize) -> Point3<f64> {
        let k = self.cells;
        let h = 1.0 / k as f64;
        Point3::new((c % k) as f64 * h, ((c / k) % k) as f64 * h, (c / (k * k)) as f64 * h)
    }

    fn cell_of(&self, x: &Point3<f64>) -> usize {
        let k = self.cells;
        let idx = |t: f64| ((t * k as f64).floor().max(0.0) as usize).min(k - 1);
        idx(x.x) + k * (idx(x.y) + k * idx(x.z))
    }

    fn value_in(&self, c: usize, x: &Point3<f64>) -> Vector3<f64> {
        let (d1, d2) = self.frames[c];
        let h = 0.5 / self.cells as f64;
        let y = x - (self.cell_lo(c) + Vector3::repeat(h));
        Vector3::new(self.offsets[c][0] + d1.dot(&y), self.offsets[c][1] + d2.dot(&y), 0.0)
    }
}

impl OrthoMap for SyntheticFrameField {
    fn eval(&self, x: &Point3<f64>) -> OrthoSample {
        let c = self.cell_of(x);
        let (d1, d2) = self.frames[c];
        OrthoSample {
            value: self.value_in(c, x),
            d1,
            d2,
        }
    }

    fn sup_norm(&self) -> f64 {
        self.sup
    }

    fn quality(&self) -> f64 {
        self.quality
    }
}

#[derive(Deserialize)]
struct TableRow {
    x1: f64,
    x2: f64,
    x3: f64,
    v1: f64,
    v2: f64,
    d1x: f64,
    d1y: f64,
    d1z: f64,
    d2x: f64,
    d2y: f64,
    d2z: f64,
}

/// Diagnostics of a tabulated map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableDiagnostics {
    pub samples: usize,
    pub quality: f64,
    pub sup_norm: f64,
    /// Largest `|u|` among samples on the boundary of the unit cube.
    pub boundary_value_max: f64,
}

/// User-supplied map given by samples on the unit cube, read from CSV with
/// header `x1,x2,x3,v1,v2,d1x,d1y,d1z,d2x,d2y,d2z`. Evaluation returns the
/// nearest sample.
#[derive(Clone, Debug)]
pub struct TabulatedOrthoMap {
    points: Vec<Point3<f64>>,
    samples: Vec<OrthoSample>,
    bins: usize,
    buckets: Vec<Vec<u32>>,
    diagnostics: TableDiagnostics,
}

impl TabulatedOrthoMap {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, ConstructionError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        let mut samples = Vec::new();
        for (i, row) in rdr.deserialize::<TableRow>().enumerate() {
            let row = row.map_err(|e| ConstructionError::InvalidTable(format!("row {}: {e}", i + 1)))?;
            let x = Point3::new(row.x1, row.x2, row.x3);
            let s = OrthoSample {
                value: Vector3::new(row.v1, row.v2, 0.0),
                d1: Vector3::new(row.d1x, row.d1y, row.d1z),
                d2: Vector3::new(row.d2x, row.d2y, row.d2z),
            };
            let finite = x.iter().chain(s.value.iter()).chain(s.d1.iter()).chain(s.d2.iter()).all(|v| v.is_finite());
            if !finite {
                return Err(ConstructionError::InvalidTable(format!("row {}: non-finite entry", i + 1)));
            }
            if !Aabb::unit().contains(&x, 1e-12) {
                return Err(ConstructionError::InvalidTable(format!("row {}: point outside the unit cube", i + 1)));
            }
            points.push(x);
            samples.push(s);
        }
        Self::from_samples(points, samples)
    }

    pub fn from_samples(points: Vec<Point3<f64>>, samples: Vec<OrthoSample>) -> Result<Self, ConstructionError> {
        if points.is_empty() || points.len() != samples.len() {
            return Err(ConstructionError::InvalidTable("no samples".into()));
        }
        let bins = ((points.len() as f64).cbrt().ceil() as usize).clamp(1, 128);
        let mut buckets = vec![Vec::new(); bins * bins * bins];
        for (i, x) in points.iter().enumerate() {
            buckets[bucket_index(bins, x)].push(i as u32);
        }
        let mut diagnostics = TableDiagnostics {
            samples: points.len(),
            quality: 0.0,
            sup_norm: 0.0,
            boundary_value_max: 0.0,
        };
        for (x, s) in points.iter().zip(&samples) {
            diagnostics.quality = diagnostics.quality.max(orthonormality_defect(&s.d1, &s.d2));
            diagnostics.sup_norm = diagnostics.sup_norm.max(s.value.norm());
            if !Aabb::unit().contains_strictly(x, 1e-9) {
                diagnostics.boundary_value_max = diagnostics.boundary_value_max.max(s.value.norm());
            }
        }
        Ok(Self {
            points,
            samples,
            bins,
            buckets,
            diagnostics,
        })
    }

    pub fn diagnostics(&self) -> &TableDiagnostics {
        &self.diagnostics
    }

    fn nearest(&self, x: &Point3<f64>) -> usize {
        let b = self.bins as i64;
        let cell = |t: f64| ((t * b as f64).floor() as i64).clamp(0, b - 1);
        let c = [cell(x.x), cell(x.y), cell(x.z)];
        let width = 1.0 / b as f64;
        let mut best = (f64::INFINITY, 0usize);
        for ring in 0..b {
            for i in (c[0] - ring).max(0)..=(c[0] + ring).min(b - 1) {
                for j in (c[1] - ring).max(0)..=(c[1] + ring).min(b - 1) {
                    for k in (c[2] - ring).max(0)..=(c[2] + ring).min(b - 1) {
                        let shell = (i - c[0]).abs().max((j - c[1]).abs()).max((k - c[2]).abs());
                        if shell != ring {
                            continue;
                        }
                        for &p in &self.buckets[(i + b * (j + b * k)) as usize] {
                            let d = (self.points[p as usize] - x).norm_squared();
                            if d < best.0 || (d == best.0 && (p as usize) < best.1) {
                                best = (d, p as usize);
                            }
                        }
                    }
                }
            }
            // every unvisited bucket is at least `ring` widths away
            let reach = ring as f64 * width;
            if best.0.is_finite() && best.0 <= reach * reach {
                break;
            }
        }
        best.1
    }
}

fn bucket_index(bins: usize, x: &Point3<f64>) -> usize {
    let cell = |t: f64| ((t * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    cell(x.x) + bins * (cell(x.y) + bins * cell(x.z))
}

impl OrthoMap for TabulatedOrthoMap {
    fn eval(&self, x: &Point3<f64>) -> OrthoSample {
        self.samples[self.nearest(x)]
    }

    fn sup_norm(&self) -> f64 {
        self.diagnostics.sup_norm
    }

    fn quality(&self) -> f64 {
        self.diagnostics.quality
    }
}

/// `x ↦ a·u((x − lo)/a)` on the axis cube `lo + [0, a]³`: values scale by
/// the edge `a`, gradients are unchanged.
#[derive(Clone, Debug)]
pub struct ScaledMap<M> {
    inner: M,
    cube: Aabb,
    edge: f64,
}

/// Rescales a unit-cube map onto an axis-aligned cube.
pub fn scale_translate_map<M: OrthoMap>(map: M, cube: &Aabb) -> Result<ScaledMap<M>, ConstructionError> {
    let sides = cube.sides();
    let edge = sides[0];
    if (sides - Vector3::repeat(edge)).amax() > 1e-12 * edge {
        return Err(crate::error::GeometryError::InvalidParameter {
            name: "cube",
            reason: "scaling needs a cube with equal sides".into(),
        }
        .into());
    }
    Ok(ScaledMap {
        inner: map,
        cube: *cube,
        edge,
    })
}

impl<M: OrthoMap> OrthoMap for ScaledMap<M> {
    fn domain(&self) -> Aabb {
        self.cube
    }

    fn eval(&self, x: &Point3<f64>) -> OrthoSample {
        let t = Point3::from((x - self.cube.lo()) / self.edge);
        let s = self.inner.eval(&t);
        OrthoSample {
            value: s.value * self.edge,
            ..s
        }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm() * self.edge
    }

    fn quality(&self) -> f64 {
        self.inner.quality()
    }
}

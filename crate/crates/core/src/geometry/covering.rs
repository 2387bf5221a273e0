//! Finite Vitali coverings of boxes by disjoint-interior cubes.
//!
//! Three storage forms share one interface:
//!
//! * [`UniformGrid`]: axis-aligned cubes of one edge tiling the box.
//! * [`NestedLattice`]: greedy multiscale packing by rotated cubes. Level `k`
//!   is the rotated grid of edge `e₀·2⁻ᵏ`; a cell is kept when it lies inside
//!   the box and its parent does not. Cubes are never stored: a point is
//!   located in `O(levels)` and the covered volume after `K` levels equals the
//!   number of level-`K` cells inside the box times `e_K³`.
//! * an explicit list, for user-supplied coverings.

use nalgebra::{Matrix3, Point3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cube::{Aabb, OrientedCube};
use super::rotation::Rotation3;
use crate::error::GeometryError;
use crate::rng;

/// Relative tolerance for "cube inside region" tests.
pub const INSIDE_TOL: f64 = 1e-12;
/// Relative tolerance (in cell units) for shared-face ties in [`Covering::locate`].
pub const TIE_TOL: f64 = 1e-12;

/// Identifies a cube of a covering. Ordering is the tie-break order of
/// [`Covering::locate`]: coarser lattice levels first, then lexicographic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CubeId {
    Listed(usize),
    Cell { level: u32, index: [i64; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Location {
    Cube { id: CubeId, cube: OrientedCube },
    Residual,
}

impl Location {
    pub fn cube(&self) -> Option<&OrientedCube> {
        match self {
            Location::Cube { cube, .. } => Some(cube),
            Location::Residual => None,
        }
    }
}

/// Axis-aligned cubes `origin + edge·([i,i+1]×[j,j+1]×[l,l+1])`, indexed
/// `i + nx·(j + ny·l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: [f64; 3],
    pub edge: f64,
    pub counts: [usize; 3],
}

/// Nested rotated grids sharing one origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedLattice {
    pub origin: [f64; 3],
    pub base_edge: f64,
    pub levels: u32,
    /// Exact number of cells inside the region per level, where counted.
    pub inside_counts: Vec<Option<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CubeSet {
    Grid(UniformGrid),
    Lattice(NestedLattice),
    List(Vec<OrientedCube>),
}

/// Monte Carlo estimate of the covered fraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub samples: u64,
    pub seed: u64,
    pub covered_fraction: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Covering {
    region: Aabb,
    orientation: Rotation3,
    cubes: CubeSet,
    residual_measure_bound: f64,
    residual_exact: bool,
    edge_bound: f64,
    certificate: Option<CoverageEstimate>,
}

/// Knobs for [`rotated_vitali_cover`].
#[derive(Clone, Copy, Debug)]
pub struct PackingOptions {
    pub max_scales: u32,
    /// Levels with at most this many lattice columns are counted exactly;
    /// finer levels fall back to the boundary-layer bound.
    pub exact_column_budget: f64,
    /// Samples for the Monte Carlo certificate; 0 disables it.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self {
            max_scales: 40,
            exact_column_budget: 2.0e7,
            mc_samples: 1 << 20,
            seed: 0,
        }
    }
}

/// Uniform axis-aligned grid with the largest edge `≤ edge_bound` that tiles
/// the box exactly; if none exists within the search window, the largest
/// admissible edge is used and the uncovered slivers are reported as residual.
pub fn axis_grid_cover(region: &Aabb, edge_bound: f64) -> Result<Covering, GeometryError> {
    if !(edge_bound > 0.0 && edge_bound.is_finite()) {
        return Err(GeometryError::InvalidParameter {
            name: "edge_bound",
            reason: format!("must be positive, got {edge_bound}"),
        });
    }
    const SEARCH: usize = 4096;
    let s = region.sides();
    let first = ((s[0] / edge_bound) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut choice = None;
    for k0 in first..first + SEARCH {
        let e = s[0] / k0 as f64;
        let mut counts = [k0, 0, 0];
        let tiles = (1..3).all(|m| {
            let r = s[m] / e;
            let k = r.round();
            counts[m] = k as usize;
            k >= 1.0 && (r - k).abs() <= 1e-9 * r.max(1.0)
        });
        if tiles {
            choice = Some((e, counts));
            break;
        }
    }
    let (edge, counts) = choice.unwrap_or_else(|| {
        let e = (0..3)
            .map(|m| s[m] / (s[m] / edge_bound).ceil())
            .fold(f64::INFINITY, f64::min);
        let counts = std::array::from_fn(|m| ((s[m] / e) + 1e-9).floor() as usize);
        (e, counts)
    });
    let covered = counts.iter().product::<usize>() as f64 * edge.powi(3);
    let residual = (region.volume() - covered).max(0.0);
    let exact_tiling = counts
        .iter()
        .enumerate()
        .all(|(m, &k)| ((k as f64 * edge) - s[m]).abs() <= 1e-9 * s[m]);
    Ok(Covering {
        region: *region,
        orientation: Rotation3::identity(),
        cubes: CubeSet::Grid(UniformGrid {
            origin: region.lo().coords.into(),
            edge,
            counts,
        }),
        residual_measure_bound: if exact_tiling { 0.0 } else { residual },
        residual_exact: true,
        edge_bound,
        certificate: None,
    })
}

/// Greedy multiscale packing of `region` by cubes with edges along the
/// columns of `orientation`, refined until the certified residual is at most
/// `eps·|region|`.
pub fn rotated_vitali_cover(
    region: &Aabb,
    orientation: &Rotation3,
    edge_bound: f64,
    eps: f64,
    opts: &PackingOptions,
) -> Result<Covering, GeometryError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GeometryError::InvalidParameter {
            name: "eps",
            reason: format!("must lie in (0, 1), got {eps}"),
        });
    }
    if !(edge_bound > 0.0 && edge_bound.is_finite()) {
        return Err(GeometryError::InvalidParameter {
            name: "edge_bound",
            reason: format!("must be positive, got {edge_bound}"),
        });
    }
    let w = orientation.extent_factors();
    let sides = region.sides();
    // largest rotated cube centred in the box
    let inscribed = (0..3).map(|m| sides[m] / w[m]).fold(f64::INFINITY, f64::min);
    let base_edge = edge_bound.min(inscribed);
    let origin = region.center() - orientation.matrix() * Vector3::repeat(0.5 * base_edge);
    let mut lattice = NestedLattice {
        origin: origin.coords.into(),
        base_edge,
        levels: 0,
        inside_counts: Vec::new(),
    };
    let volume = region.volume();
    let target = eps * volume;
    let mut last_residual = volume;
    for k in 0..opts.max_scales {
        let geom = LatticeGeom::new(region, orientation, &lattice);
        let count = (geom.columns(k) <= opts.exact_column_budget).then(|| geom.count_inside(k));
        lattice.inside_counts.push(count);
        lattice.levels = k + 1;
        let layer = geom.layer_bound(k);
        let (residual, exact) = match count {
            Some(c) => {
                let r = (volume - c as f64 * geom.edge(k).powi(3)).max(0.0);
                if r <= layer {
                    (r, true)
                } else {
                    (layer, false)
                }
            }
            None => (layer, false),
        };
        last_residual = residual;
        if residual <= target {
            let mut cov = Covering {
                region: *region,
                orientation: *orientation,
                cubes: CubeSet::Lattice(lattice),
                residual_measure_bound: residual,
                residual_exact: exact,
                edge_bound,
                certificate: None,
            };
            if opts.mc_samples > 0 {
                let seed = rng::substream(opts.seed, "packing-cert");
                cov.certificate = Some(cov.estimate_coverage(opts.mc_samples, seed));
            }
            return Ok(cov);
        }
    }
    Err(GeometryError::BudgetExceeded {
        max_scales: opts.max_scales,
        residual: last_residual,
        target,
    })
}

impl Covering {
    /// Covering given by an explicit cube list. Cubes must lie in `region`
    /// and have edge at most `edge_bound`; interiors are assumed disjoint
    /// (check with [`Covering::check_disjoint`]).
    pub fn from_cubes(region: Aabb, cubes: Vec<OrientedCube>, edge_bound: f64) -> Result<Self, GeometryError> {
        let tol = INSIDE_TOL * region.scale();
        for (i, c) in cubes.iter().enumerate() {
            if !c.inside_box(&region, tol) {
                return Err(GeometryError::Integrity(format!("cube {i} leaves the region")));
            }
            if c.edge() > edge_bound * (1.0 + 1e-12) {
                return Err(GeometryError::Integrity(format!("cube {i} exceeds the edge bound")));
            }
        }
        let orientation = cubes.first().map(|c| c.orientation).unwrap_or_else(Rotation3::identity);
        let covered: f64 = cubes.iter().map(OrientedCube::volume).sum();
        Ok(Self {
            region,
            orientation,
            residual_measure_bound: (region.volume() - covered).max(0.0),
            residual_exact: true,
            cubes: CubeSet::List(cubes),
            edge_bound,
            certificate: None,
        })
    }

    pub fn region(&self) -> &Aabb {
        &self.region
    }

    pub fn orientation(&self) -> &Rotation3 {
        &self.orientation
    }

    pub fn cube_set(&self) -> &CubeSet {
        &self.cubes
    }

    pub fn edge_bound(&self) -> f64 {
        self.edge_bound
    }

    /// Upper bound on the uncovered measure.
    pub fn residual_measure_bound(&self) -> f64 {
        self.residual_measure_bound
    }

    /// Whether the residual is the exact uncovered measure (as opposed to the
    /// boundary-layer bound).
    pub fn residual_is_exact(&self) -> bool {
        self.residual_exact
    }

    pub fn certificate(&self) -> Option<&CoverageEstimate> {
        self.certificate.as_ref()
    }

    pub fn set_certificate(&mut self, cert: CoverageEstimate) {
        self.certificate = Some(cert);
    }

    /// Certified lower bound of the covered measure.
    pub fn covered_measure_lower(&self) -> f64 {
        self.region.volume() - self.residual_measure_bound
    }

    /// Certified lower bound of the covered fraction.
    pub fn covered_fraction_lower(&self) -> f64 {
        1.0 - self.residual_measure_bound / self.region.volume()
    }

    /// Largest half-edge over all cubes.
    pub fn max_half_edge(&self) -> f64 {
        match &self.cubes {
            CubeSet::Grid(g) => 0.5 * g.edge,
            CubeSet::Lattice(l) => 0.5 * l.base_edge,
            CubeSet::List(v) => v.iter().map(|c| c.half_edge).fold(0.0, f64::max),
        }
    }

    /// Number of cubes, when known without enumeration.
    pub fn cube_count(&self) -> Option<u64> {
        match &self.cubes {
            CubeSet::Grid(g) => Some(g.counts.iter().map(|&c| c as u64).product()),
            CubeSet::List(v) => Some(v.len() as u64),
            CubeSet::Lattice(l) => {
                let mut total = 0u64;
                let mut prev = 0u64;
                for c in &l.inside_counts {
                    let c = (*c)?;
                    total += c - 8 * prev;
                    prev = c;
                }
                Some(total)
            }
        }
    }

    /// The cube whose closed body contains `x`; on shared faces the cube
    /// with the lowest [`CubeId`] wins.
    pub fn locate(&self, x: &Point3<f64>) -> Result<Location, GeometryError> {
        let tol = INSIDE_TOL * self.region.scale();
        if !self.region.contains(x, tol) {
            return Err(GeometryError::OutOfDomain);
        }
        Ok(match &self.cubes {
            CubeSet::Grid(g) => locate_grid(g, x),
            CubeSet::Lattice(l) => LatticeGeom::new(&self.region, &self.orientation, l).locate(x),
            CubeSet::List(v) => v
                .iter()
                .enumerate()
                .find(|(_, c)| c.contains(x, tol))
                .map(|(i, c)| Location::Cube {
                    id: CubeId::Listed(i),
                    cube: *c,
                })
                .unwrap_or(Location::Residual),
        })
    }

    /// All cubes with their ids. Lattice coverings are enumerated level by
    /// level, which is only sensible for coarse packings.
    pub fn cubes(&self) -> Vec<(CubeId, OrientedCube)> {
        match &self.cubes {
            CubeSet::Grid(g) => {
                let [nx, ny, nz] = g.counts;
                let mut out = Vec::with_capacity(nx * ny * nz);
                for l in 0..nz {
                    for j in 0..ny {
                        for i in 0..nx {
                            out.push((CubeId::Listed(i + nx * (j + ny * l)), grid_cube(g, [i, j, l])));
                        }
                    }
                }
                out
            }
            CubeSet::List(v) => v.iter().enumerate().map(|(i, c)| (CubeId::Listed(i), *c)).collect(),
            CubeSet::Lattice(l) => LatticeGeom::new(&self.region, &self.orientation, l).kept_cubes(),
        }
    }

    /// Exact pairwise interior-disjointness check (separating-axis test on
    /// every pair whose bounding boxes overlap). Returns the first offending
    /// pair.
    pub fn check_disjoint(&self, tol: f64) -> Result<(), (CubeId, CubeId)> {
        let cubes = self.cubes();
        let boxes: Vec<Aabb> = cubes.iter().map(|(_, c)| c.bounding_box()).collect();
        let tree = BoxTree::build(&boxes);
        let bad = (0..cubes.len()).into_par_iter().find_map_first(|i| {
            let mut hit = None;
            tree.query(&boxes[i], tol, &mut |j| {
                if hit.is_none() && j > i && !cubes[i].1.interiors_disjoint(&cubes[j].1, tol) {
                    hit = Some((cubes[i].0, cubes[j].0));
                }
            });
            hit
        });
        match bad {
            Some(pair) => Err(pair),
            None => Ok(()),
        }
    }

    /// Fraction of `samples` uniform points of the region that land in a cube.
    pub fn estimate_coverage(&self, samples: usize, stream_seed: u64) -> CoverageEstimate {
        let hits: u64 = (0..rng::chunk_count(samples))
            .into_par_iter()
            .map(|c| {
                let mut r = rng::chunk_rng(stream_seed, c as u64);
                let mut hits = 0u64;
                for _ in 0..rng::chunk_len(samples, c) {
                    let t = Vector3::new(r.random(), r.random(), r.random());
                    let x = self.region.at(&t);
                    if matches!(self.locate(&x), Ok(Location::Cube { .. })) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        let p = hits as f64 / samples as f64;
        CoverageEstimate {
            samples: samples as u64,
            seed: stream_seed,
            covered_fraction: p,
            sigma: (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }
}

fn grid_cube(g: &UniformGrid, idx: [usize; 3]) -> OrientedCube {
    let h = 0.5 * g.edge;
    let center = Point3::from(std::array::from_fn(|m| g.origin[m] + g.edge * idx[m] as f64 + h));
    OrientedCube {
        center,
        half_edge: h,
        orientation: Rotation3::identity(),
    }
}

fn locate_grid(g: &UniformGrid, x: &Point3<f64>) -> Location {
    let mut idx = [0usize; 3];
    for m in 0..3 {
        let t = (x[m] - g.origin[m]) / g.edge;
        let mut i = t.floor();
        let frac = t - i;
        if frac < TIE_TOL && i >= 1.0 {
            i -= 1.0;
        }
        if i < 0.0 {
            i = 0.0;
        }
        let n = g.counts[m] as f64;
        if i >= n {
            // only the far face itself belongs to the last cube
            if i == n && frac < TIE_TOL {
                i = n - 1.0;
            } else {
                return Location::Residual;
            }
        }
        idx[m] = i as usize;
    }
    let [nx, ny, _] = g.counts;
    Location::Cube {
        id: CubeId::Listed(idx[0] + nx * (idx[1] + ny * idx[2])),
        cube: grid_cube(g, idx),
    }
}

/// Geometry helper for one [`NestedLattice`].
struct LatticeGeom<'a> {
    region: &'a Aabb,
    rot: &'a Rotation3,
    r: Matrix3<f64>,
    origin: Vector3<f64>,
    base_edge: f64,
    levels: u32,
    neg: Vector3<f64>,
    pos: Vector3<f64>,
    tol: f64,
}

impl<'a> LatticeGeom<'a> {
    fn new(region: &'a Aabb, rot: &'a Rotation3, lattice: &NestedLattice) -> Self {
        let r = *rot.matrix();
        Self {
            region,
            rot,
            r,
            origin: Vector3::from(lattice.origin),
            base_edge: lattice.base_edge,
            levels: lattice.levels,
            neg: Vector3::from_fn(|m, _| (0..3).map(|c| r[(m, c)].min(0.0)).sum()),
            pos: Vector3::from_fn(|m, _| (0..3).map(|c| r[(m, c)].max(0.0)).sum()),
            tol: INSIDE_TOL * region.scale(),
        }
    }

    fn edge(&self, level: u32) -> f64 {
        self.base_edge * 0.5f64.powi(level as i32)
    }

    fn inside(&self, level: u32, idx: [i64; 3]) -> bool {
        let e = self.edge(level);
        let (lo, hi) = (self.region.lo(), self.region.hi());
        (0..3).all(|m| {
            let base = self.origin[m] + e * (self.r[(m, 0)] * idx[0] as f64 + self.r[(m, 1)] * idx[1] as f64);
            let v = base + e * self.r[(m, 2)] * idx[2] as f64;
            v + e * self.neg[m] >= lo[m] - self.tol && v + e * self.pos[m] <= hi[m] + self.tol
        })
    }

    fn kept(&self, level: u32, idx: [i64; 3]) -> bool {
        self.inside(level, idx) && (level == 0 || !self.inside(level - 1, idx.map(|v| v.div_euclid(2))))
    }

    fn cube(&self, level: u32, idx: [i64; 3]) -> OrientedCube {
        let e = self.edge(level);
        let local = Vector3::new(idx[0] as f64 + 0.5, idx[1] as f64 + 0.5, idx[2] as f64 + 0.5) * e;
        OrientedCube {
            center: Point3::from(self.origin + self.r * local),
            half_edge: 0.5 * e,
            orientation: *self.rot,
        }
    }

    /// Index ranges (inclusive) of cells meeting the region's frame-aligned hull.
    fn index_range(&self, level: u32) -> [(i64, i64); 3] {
        let e = self.edge(level);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in self.region.corners() {
            let y = self.r.tr_mul(&(c.coords - self.origin));
            for m in 0..3 {
                lo[m] = lo[m].min(y[m]);
                hi[m] = hi[m].max(y[m]);
            }
        }
        std::array::from_fn(|m| ((lo[m] / e).floor() as i64 - 1, (hi[m] / e).floor() as i64 + 1))
    }

    fn columns(&self, level: u32) -> f64 {
        let r = self.index_range(level);
        (r[0].1 - r[0].0 + 1) as f64 * (r[1].1 - r[1].0 + 1) as f64
    }

    /// Inclusive range of `l` such that cell `(i, j, l)` is inside the region.
    fn column_span(&self, level: u32, i: i64, j: i64) -> Option<(i64, i64)> {
        let e = self.edge(level);
        let (lo, hi) = (self.region.lo(), self.region.hi());
        let mut lmin = f64::NEG_INFINITY;
        let mut lmax = f64::INFINITY;
        for m in 0..3 {
            let base = self.origin[m] + e * (self.r[(m, 0)] * i as f64 + self.r[(m, 1)] * j as f64);
            let a = lo[m] - self.tol - base - e * self.neg[m];
            let b = hi[m] + self.tol - base - e * self.pos[m];
            let c = e * self.r[(m, 2)];
            if c.abs() < 1e-15 * e {
                if a > 0.0 || b < 0.0 {
                    return None;
                }
            } else if c > 0.0 {
                lmin = lmin.max(a / c);
                lmax = lmax.min(b / c);
            } else {
                lmin = lmin.max(b / c);
                lmax = lmax.min(a / c);
            }
        }
        let (l0, l1) = (lmin.ceil(), lmax.floor());
        (l0 <= l1 && l0.is_finite() && l1.is_finite()).then_some((l0 as i64, l1 as i64))
    }

    fn count_inside(&self, level: u32) -> u64 {
        let [ri, rj, _] = self.index_range(level);
        (ri.0..=ri.1)
            .into_par_iter()
            .map(|i| {
                (rj.0..=rj.1)
                    .filter_map(|j| self.column_span(level, i, j))
                    .map(|(a, b)| (b - a + 1) as u64)
                    .sum::<u64>()
            })
            .sum()
    }

    /// Measure of the box minus its inner box shrunk by one level-`k` cell
    /// extent on every side; the residual lies inside this layer.
    fn layer_bound(&self, level: u32) -> f64 {
        let e = self.edge(level);
        let w = self.rot.extent_factors();
        let s = self.region.sides();
        let inner: f64 = (0..3).map(|m| (s[m] - 2.0 * e * w[m]).max(0.0)).product();
        self.region.volume() - inner
    }

    fn kept_cubes(&self) -> Vec<(CubeId, OrientedCube)> {
        let mut out = Vec::new();
        for level in 0..self.levels {
            let [ri, rj, _] = self.index_range(level);
            for i in ri.0..=ri.1 {
                for j in rj.0..=rj.1 {
                    if let Some((a, b)) = self.column_span(level, i, j) {
                        for l in a..=b {
                            let idx = [i, j, l];
                            if self.kept(level, idx) {
                                out.push((CubeId::Cell { level, index: idx }, self.cube(level, idx)));
                            }
                        }
                    }
                }
            }
        }
        out.sort_by_key(|a| a.0);
        out
    }

    fn locate(&self, x: &Point3<f64>) -> Location {
        let y = self.r.tr_mul(&(x.coords - self.origin));
        for level in 0..self.levels {
            let e = self.edge(level);
            let mut cands: [[i64; 3]; 3] = [[0; 3]; 3];
            let mut ncand = [1usize; 3];
            for m in 0..3 {
                let t = y[m] / e;
                let i = t.floor();
                let f = t - i;
                let i = i as i64;
                cands[m][0] = i;
                if f < TIE_TOL {
                    cands[m][ncand[m]] = i - 1;
                    ncand[m] += 1;
                } else if f > 1.0 - TIE_TOL {
                    cands[m][ncand[m]] = i + 1;
                    ncand[m] += 1;
                }
            }
            let mut best: Option<[i64; 3]> = None;
            for a in &cands[0][..ncand[0]] {
                for b in &cands[1][..ncand[1]] {
                    for c in &cands[2][..ncand[2]] {
                        let idx = [*a, *b, *c];
                        if self.kept(level, idx) && best.is_none_or(|cur| idx < cur) {
                            best = Some(idx);
                        }
                    }
                }
            }
            if let Some(idx) = best {
                return Location::Cube {
                    id: CubeId::Cell { level, index: idx },
                    cube: self.cube(level, idx),
                };
            }
        }
        Location::Residual
    }
}

/// Bounding-volume hierarchy over boxes, used for the disjointness check.
struct BoxTree<'a> {
    boxes: &'a [Aabb],
    nodes: Vec<Node>,
    order: Vec<usize>,
}

struct Node {
    bounds: ([f64; 3], [f64; 3]),
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

impl<'a> BoxTree<'a> {
    const LEAF: usize = 8;

    fn build(boxes: &'a [Aabb]) -> Self {
        let mut tree = Self {
            boxes,
            nodes: Vec::new(),
            order: (0..boxes.len()).collect(),
        };
        if !boxes.is_empty() {
            tree.build_node(0, boxes.len());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for m in 0..3 {
                lo[m] = lo[m].min(self.boxes[i].lo()[m]);
                hi[m] = hi[m].max(self.boxes[i].hi()[m]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds: (lo, hi),
            start,
            end,
            children: None,
        });
        if end - start > Self::LEAF {
            let axis = (0..3)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            let boxes = self.boxes;
            let mid = (start + end) / 2;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                boxes[a].center()[axis].total_cmp(&boxes[b].center()[axis])
            });
            let l = self.build_node(start, mid);
            let r = self.build_node(mid, end);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    fn query(&self, b: &Aabb, tol: f64, f: &mut impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let (lo, hi) = node.bounds;
            if (0..3).any(|m| hi[m] <= b.lo()[m] + tol || b.hi()[m] <= lo[m] + tol) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for &i in &self.order[node.start..node.end] {
                        if !self.boxes[i].interiors_disjoint(b, tol) {
                            f(i);
                        }
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
struct CubeDoc {
    center: [f64; 3],
    half_edge: f64,
    quaternion: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct CoveringDoc {
    region: Aabb,
    cubes: Vec<CubeDoc>,
    residual_measure_bound: f64,
    edge_bound: f64,
    residual_exact: bool,
    orientation: [f64; 4],
    #[serde(default)]
    grid: Option<UniformGrid>,
    #[serde(default)]
    lattice: Option<NestedLattice>,
    #[serde(default)]
    certificate: Option<CoverageEstimate>,
    #[serde(default)]
    checksum: String,
}

fn checksum(doc: &CoveringDoc) -> Result<String, GeometryError> {
    let body = serde_json::to_string(doc).map_err(|e| GeometryError::Integrity(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(body.as_bytes())))
}

impl Covering {
    /// Serializes to the covering JSON schema. Grid and list coverings carry
    /// their full cube list; lattice coverings carry the lattice descriptor
    /// and an empty list.
    pub fn to_json(&self) -> Result<String, GeometryError> {
        let q = self.orientation.quaternion();
        let cubes = match &self.cubes {
            CubeSet::Lattice(_) => Vec::new(),
            _ => self
                .cubes()
                .into_iter()
                .map(|(_, c)| CubeDoc {
                    center: c.center.coords.into(),
                    half_edge: c.half_edge,
                    quaternion: c.orientation.quaternion(),
                })
                .collect(),
        };
        let mut doc = CoveringDoc {
            region: self.region,
            cubes,
            residual_measure_bound: self.residual_measure_bound,
            edge_bound: self.edge_bound,
            residual_exact: self.residual_exact,
            orientation: q,
            grid: match &self.cubes {
                CubeSet::Grid(g) => Some(g.clone()),
                _ => None,
            },
            lattice: match &self.cubes {
                CubeSet::Lattice(l) => Some(l.clone()),
                _ => None,
            },
            certificate: self.certificate,
            checksum: String::new(),
        };
        doc.checksum = checksum(&doc)?;
        serde_json::to_string_pretty(&doc).map_err(|e| GeometryError::Integrity(e.to_string()))
    }

    /// Parses and validates a covering document. Any schema, checksum or
    /// invariant violation is reported as [`GeometryError::Integrity`].
    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let mut doc: CoveringDoc =
            serde_json::from_str(text).map_err(|e| GeometryError::Integrity(format!("malformed covering: {e}")))?;
        let stored = std::mem::take(&mut doc.checksum);
        if stored != checksum(&doc)? {
            return Err(GeometryError::Integrity("checksum mismatch".into()));
        }
        let orientation =
            Rotation3::from_quaternion(doc.orientation).map_err(|e| GeometryError::Integrity(e.to_string()))?;
        let bad = |msg: &str| GeometryError::Integrity(msg.to_string());
        if !(doc.edge_bound > 0.0) || !(doc.residual_measure_bound >= 0.0) {
            return Err(bad("edge bound / residual out of range"));
        }
        let cubes = match (doc.grid, doc.lattice) {
            (Some(g), None) => {
                let n: usize = g.counts.iter().product();
                if n != doc.cubes.len() || !(g.edge > 0.0) || g.edge > doc.edge_bound * (1.0 + 1e-12) {
                    return Err(bad("grid descriptor disagrees with cube list"));
                }
                CubeSet::Grid(g)
            }
            (None, Some(l)) => {
                if !(l.base_edge > 0.0) || l.base_edge > doc.edge_bound * (1.0 + 1e-12) || l.levels == 0 {
                    return Err(bad("invalid lattice descriptor"));
                }
                if l.inside_counts.len() != l.levels as usize {
                    return Err(bad("lattice level counts disagree"));
                }
                CubeSet::Lattice(l)
            }
            (None, None) => {
                let list = doc
                    .cubes
                    .iter()
                    .map(|c| {
                        let rot = Rotation3::from_quaternion(c.quaternion)?;
                        OrientedCube::new(Point3::from(c.center), c.half_edge, rot)
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| GeometryError::Integrity(e.to_string()))?;
                let cov = Covering::from_cubes(doc.region, list, doc.edge_bound)?;
                if doc.residual_measure_bound + 1e-12 * doc.region.volume() < cov.residual_measure_bound {
                    return Err(bad("residual bound understates the uncovered measure"));
                }
                cov.cubes
            }
            (Some(_), Some(_)) => return Err(bad("both grid and lattice descriptors present")),
        };
        let cov = Covering {
            region: doc.region,
            orientation,
            cubes,
            residual_measure_bound: doc.residual_measure_bound,
            residual_exact: doc.residual_exact,
            edge_bound: doc.edge_bound,
            certificate: doc.certificate,
        };
        let tol = INSIDE_TOL * cov.region.scale();
        if let CubeSet::Grid(_) = &cov.cubes {
            for (i, c) in doc.cubes.iter().enumerate() {
                let cube = OrientedCube::axis_aligned(Point3::from(c.center), c.half_edge)
                    .map_err(|e| GeometryError::Integrity(e.to_string()))?;
                if !cube.inside_box(&cov.region, tol) {
                    return Err(GeometryError::Integrity(format!("cube {i} leaves the region")));
                }
            }
        }
        Ok(cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation::default_base_rotation;

    fn opts() -> PackingOptions {
        PackingOptions {
            mc_samples: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn dyadic_split_and_single_cube() {
        let c = axis_grid_cover(&Aabb::unit(), 0.5).unwrap();
        assert_eq!(c.cube_count(), Some(8));
        assert_eq!(c.residual_measure_bound(), 0.0);
        let c = axis_grid_cover(&Aabb::unit(), 1.0).unwrap();
        assert_eq!(c.cube_count(), Some(1));
        assert_eq!(c.residual_measure_bound(), 0.0);
    }

    #[test]
    fn flat_box_uses_largest_tiling_edge() {
        let b = Aabb::new(Point3::origin(), Point3::new(1.0, 1.0, 0.9)).unwrap();
        let c = axis_grid_cover(&b, 0.5).unwrap();
        let CubeSet::Grid(g) = c.cube_set() else { panic!() };
        assert!((g.edge - 0.1).abs() < 1e-15);
        assert_eq!(g.counts, [10, 10, 9]);
        let covered: f64 = c.cubes().iter().map(|(_, q)| q.volume()).sum();
        assert!((covered - b.volume()).abs() < 1e-12);
        assert_eq!(c.residual_measure_bound(), 0.0);
    }

    #[test]
    fn sliver_fallback_reports_residual() {
        // sides 1 and 1/π have no common divisor in the search window
        let b = Aabb::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0 / std::f64::consts::PI)).unwrap();
        let c = axis_grid_cover(&b, 0.3).unwrap();
        let covered: f64 = c.cubes().iter().map(|(_, q)| q.volume()).sum();
        assert!(c.residual_measure_bound() > 0.0);
        assert!((covered + c.residual_measure_bound() - b.volume()).abs() < 1e-12);
        assert!(c.cubes().iter().all(|(_, q)| q.edge() <= 0.3));
    }

    #[test]
    fn locate_prefers_lower_index_on_faces() {
        let c = axis_grid_cover(&Aabb::unit(), 0.5).unwrap();
        let Location::Cube { id, cube } = c.locate(&Point3::new(0.25, 0.25, 0.25)).unwrap() else { panic!() };
        assert_eq!(id, CubeId::Listed(0));
        assert_eq!(cube.center, Point3::new(0.25, 0.25, 0.25));
        let Location::Cube { id, .. } = c.locate(&Point3::new(0.5, 0.25, 0.25)).unwrap() else { panic!() };
        assert_eq!(id, CubeId::Listed(0));
        let Location::Cube { id, .. } = c.locate(&Point3::new(1.0, 1.0, 1.0)).unwrap() else { panic!() };
        assert_eq!(id, CubeId::Listed(7));
        assert_eq!(c.locate(&Point3::new(1.5, 0.0, 0.0)), Err(GeometryError::OutOfDomain));
    }

    #[test]
    fn identity_orientation_reduces_to_grid() {
        let c = rotated_vitali_cover(&Aabb::unit(), &Rotation3::identity(), 0.5, 1e-3, &opts()).unwrap();
        assert_eq!(c.residual_measure_bound(), 0.0);
        assert!(c.residual_is_exact());
        assert!(c.check_disjoint(1e-12).is_ok());
    }

    #[test]
    fn coarse_target_returns_inscribed_cube() {
        let r = default_base_rotation();
        let c = rotated_vitali_cover(&Aabb::unit(), &r, 1.0, 0.999, &opts()).unwrap();
        assert_eq!(c.cube_count(), Some(1));
        let cube = c.cubes()[0].1;
        assert!(cube.inside_box(&Aabb::unit(), 1e-12));
        assert!((cube.center - Point3::new(0.5, 0.5, 0.5)).norm() < 1e-12);
        // touches the box: it is the largest centred one
        let bb = cube.bounding_box();
        let gap = (0..3)
            .map(|m| bb.lo()[m].min(1.0 - bb.hi()[m]))
            .fold(f64::INFINITY, f64::min);
        assert!(gap.abs() < 1e-12);
    }

    #[test]
    fn rotated_cover_is_disjoint_and_certified() {
        let r = default_base_rotation();
        let eps = 0.05;
        let c = rotated_vitali_cover(&Aabb::unit(), &r, 0.5, eps, &opts()).unwrap();
        assert!(c.residual_measure_bound() <= eps);
        assert!(c.check_disjoint(1e-12).is_ok());
        let cubes = c.cubes();
        let vol: f64 = cubes.iter().map(|(_, q)| q.volume()).sum();
        assert!(vol >= 1.0 - eps);
        assert_eq!(c.cube_count(), Some(cubes.len() as u64));
        assert!(cubes.iter().all(|(_, q)| q.inside_box(&Aabb::unit(), 1e-12) && q.edge() <= 0.5));
        let cert = c.certificate().unwrap();
        assert!(cert.covered_fraction >= 1.0 - eps - 3.0 * cert.sigma);
    }

    #[test]
    fn budget_exceeded_when_scales_run_out() {
        let r = default_base_rotation();
        let o = PackingOptions {
            max_scales: 2,
            ..opts()
        };
        assert!(matches!(
            rotated_vitali_cover(&Aabb::unit(), &r, 0.5, 1e-4, &o),
            Err(GeometryError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_tamper_detection() {
        let r = default_base_rotation();
        let c = rotated_vitali_cover(&Aabb::unit(), &r, 0.5, 0.1, &opts()).unwrap();
        let text = c.to_json().unwrap();
        let back = Covering::from_json(&text).unwrap();
        assert_eq!(back, c);
        let tampered = text.replacen("\"base_edge\": 0.", "\"base_edge\": 0.0", 1);
        assert!(matches!(Covering::from_json(&tampered), Err(GeometryError::Integrity(_))));
        assert!(matches!(Covering::from_json("{"), Err(GeometryError::Integrity(_))));

        let g = axis_grid_cover(&Aabb::unit(), 0.25).unwrap();
        assert_eq!(Covering::from_json(&g.to_json().unwrap()).unwrap(), g);
    }
}

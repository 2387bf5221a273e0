use nalgebra::{Matrix3, Point3, Vector3};

use super::distance::{DistanceField, DistanceSample, PointTag};
use super::frame::build_p_point;
use crate::error::{ConstructionError, GeometryError};
use crate::geometry::{
    axis_grid_cover, default_base_rotation, rotated_vitali_cover, Aabb, DecompositionMode, DomainDecomposition,
    PackingOptions, Rotation3,
};

/// Inputs of the first counterexample.
#[derive(Clone, Debug)]
pub struct Theorem1Params {
    pub region: Aabb,
    pub mode: DecompositionMode,
    pub n_list: Vec<u32>,
    pub q: f64,
    /// Residual budget of the rotated coverings, relative to `|Ωₙ|`.
    pub eps: f64,
    pub rotation: Rotation3,
    /// Value of `P` where one of the coverings leaves a gap.
    pub filler: Matrix3<f64>,
    pub packing: PackingOptions,
}

impl Theorem1Params {
    pub fn new(region: Aabb, n_list: Vec<u32>, q: f64, eps: f64) -> Self {
        Self {
            region,
            mode: DecompositionMode::Single,
            n_list,
            q,
            eps,
            rotation: default_base_rotation(),
            filler: Matrix3::identity(),
            packing: PackingOptions::default(),
        }
    }

    pub fn with_mode(mut self, mode: DecompositionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.packing.seed = seed;
        self
    }
}

/// `2|Ωₙ|^{1/q}/n`: every cube of level `n` is at most this wide, which
/// makes `|Ωₙ|^{−1/q}·dist(x, ∂Q) ≤ 1/n`.
pub fn edge_bound(measure: f64, q: f64, n: u32) -> f64 {
    2.0 * measure.powf(1.0 / q) / n as f64
}

pub fn check_exponent(q: f64) -> Result<(), ConstructionError> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(ConstructionError::InvalidExponent(q))
    }
}

/// Data of one witness `uₙ`.
#[derive(Clone, Debug)]
pub struct Theorem1Level {
    pub n: u32,
    pub part_index: usize,
    pub part: Aabb,
    /// `|Ωₙ|`.
    pub measure: f64,
    /// `|Ωₙ|^{−1/q}`.
    pub scale: f64,
    pub edge_bound: f64,
    pub axis: DistanceField,
    pub rotated: DistanceField,
}

impl Theorem1Level {
    /// `u¹` and `u²` at `x ∈ Ωₙ`.
    pub fn distances(&self, x: &Point3<f64>) -> Result<(DistanceSample, DistanceSample), GeometryError> {
        Ok((self.axis.eval(x)?, self.rotated.eval(x)?))
    }

    /// `sup |uₙ|₁ ≤ scale·(h_axis + h_rot)`, which is at most `2/n`.
    pub fn sup_bound(&self) -> f64 {
        self.scale * (self.axis.sup_bound() + self.rotated.sup_bound())
    }

    /// Certified lower bound on `|{x ∈ Ωₙ : both coverings contain x}|`.
    pub fn doubly_covered_lower(&self) -> f64 {
        (self.measure - self.axis.covering().residual_measure_bound() - self.rotated.covering().residual_measure_bound())
            .max(0.0)
    }

    /// Certified bounds on `∫|Duₙ|^q = |Ωₙ|⁻¹(|covered¹| + |covered²|)`.
    pub fn grad_norm_pow_q_bounds(&self) -> (f64, f64) {
        let lower = self.axis.covering().covered_measure_lower() + self.rotated.covering().covered_measure_lower();
        (lower / self.measure, 2.0)
    }
}

/// Everything known about `(uₙ, P)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bundle {
    pub u: Vector3<f64>,
    pub du: Matrix3<f64>,
    pub p: Matrix3<f64>,
    pub dup: Matrix3<f64>,
    pub tag: PointTag,
}

impl Bundle {
    /// `DuP + (DuP)ᵀ`.
    pub fn sym2(&self) -> Matrix3<f64> {
        self.dup + self.dup.transpose()
    }
}

/// The coefficient field `P` and the witnesses `uₙ` of the first
/// counterexample, at finite covering resolution.
#[derive(Clone, Debug)]
pub struct Theorem1 {
    q: f64,
    eps: f64,
    rotation: Rotation3,
    filler: Matrix3<f64>,
    seed: u64,
    decomposition: DomainDecomposition,
    levels: Vec<Theorem1Level>,
}

impl Theorem1 {
    pub fn build(params: &Theorem1Params) -> Result<Self, ConstructionError> {
        check_exponent(params.q)?;
        if params.n_list.is_empty() || params.n_list.contains(&0) {
            return Err(ConstructionError::InvalidLevel);
        }
        let decomposition = match params.mode {
            DecompositionMode::Single => DomainDecomposition::single(params.region),
            DecompositionMode::Slabs => DomainDecomposition::slabs(params.region, params.n_list.len())?,
        };
        let levels = params
            .n_list
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let part_index = if params.mode == DecompositionMode::Single { 0 } else { i };
                let part = decomposition.parts()[part_index];
                let measure = part.volume();
                let bound = edge_bound(measure, params.q, n);
                let axis = axis_grid_cover(&part, bound)?;
                let rotated = rotated_vitali_cover(&part, &params.rotation, bound, params.eps, &params.packing)?;
                Ok(Theorem1Level {
                    n,
                    part_index,
                    part,
                    measure,
                    scale: measure.powf(-1.0 / params.q),
                    edge_bound: bound,
                    axis: DistanceField::new(axis),
                    rotated: DistanceField::new(rotated),
                })
            })
            .collect::<Result<Vec<_>, ConstructionError>>()?;
        Ok(Self {
            q: params.q,
            eps: params.eps,
            rotation: params.rotation,
            filler: params.filler,
            seed: params.packing.seed,
            decomposition,
            levels,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rotation(&self) -> &Rotation3 {
        &self.rotation
    }

    pub fn filler(&self) -> &Matrix3<f64> {
        &self.filler
    }

    pub fn decomposition(&self) -> &DomainDecomposition {
        &self.decomposition
    }

    pub fn mode(&self) -> DecompositionMode {
        self.decomposition.mode()
    }

    pub fn levels(&self) -> &[Theorem1Level] {
        &self.levels
    }

    pub fn level(&self, n: u32) -> Result<&Theorem1Level, ConstructionError> {
        self.levels
            .iter()
            .find(|l| l.n == n)
            .ok_or(ConstructionError::UnknownLevel(n as usize))
    }

    /// Level whose coverings define `P` at `x`: level `n` itself for a
    /// single-part decomposition, otherwise the owner of the slab containing `x`.
    fn p_level<'a>(&'a self, level: &'a Theorem1Level, x: &Point3<f64>) -> Result<&'a Theorem1Level, GeometryError> {
        if self.mode() == DecompositionMode::Single {
            return Ok(level);
        }
        let part = self.decomposition.part_of(x).ok_or(GeometryError::OutOfDomain)?;
        Ok(&self.levels[part])
    }

    fn p_from(&self, a: &DistanceSample, b: &DistanceSample) -> Result<(Matrix3<f64>, PointTag), ConstructionError> {
        let tag = a.tag.combine(b.tag);
        if tag == PointTag::Residual {
            return Ok((self.filler, tag));
        }
        Ok((build_p_point(&a.gradient, &b.gradient)?, tag))
    }

    /// `P(x)` for the coefficient field hosting level `n`.
    pub fn coefficient(&self, n: u32, x: &Point3<f64>) -> Result<(Matrix3<f64>, PointTag), ConstructionError> {
        let level = self.p_level(self.level(n)?, x)?;
        let (a, b) = level.distances(x)?;
        self.p_from(&a, &b)
    }

    /// `(uₙ, Duₙ, P, DuₙP)` at `x ∈ Ω`. Outside `Ωₙ` the witness vanishes and
    /// the tag is [`PointTag::Inactive`].
    pub fn eval_bundle(&self, n: u32, x: &Point3<f64>) -> Result<Bundle, ConstructionError> {
        let level = self.level(n)?;
        let owner = self.p_level(level, x)?;
        let (a, b) = owner.distances(x)?;
        let (p, ptag) = self.p_from(&a, &b)?;
        if !std::ptr::eq(owner, level) {
            return Ok(Bundle {
                u: Vector3::zeros(),
                du: Matrix3::zeros(),
                p,
                dup: Matrix3::zeros(),
                tag: PointTag::Inactive,
            });
        }
        let s = level.scale;
        let u = Vector3::new(a.value, b.value, 0.0) * s;
        let du = Matrix3::from_rows(&[
            (a.gradient * s).transpose(),
            (b.gradient * s).transpose(),
            Vector3::zeros().transpose(),
        ]);
        Ok(Bundle {
            u,
            du,
            p,
            dup: du * p,
            tag: ptag,
        })
    }
}

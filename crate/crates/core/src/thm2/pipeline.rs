use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::map::{scale_translate_map, OrthoMap};
use super::rotation::frame_to_rotation_projected;
use crate::error::ConstructionError;
use crate::geometry::{axis_grid_cover, Aabb, Covering, DecompositionMode, DomainDecomposition, Location};
use crate::rng;
use crate::thm1::{check_exponent, sample_box, Bundle, PointTag, EXACT_TOL};

/// `‖DuP + (DuP)ᵀ‖_F ≤ SYM_QUALITY_CONSTANT·η·|Ωₙ|^{−1/q}` for gradient rows
/// with orthonormality defect `η ≤ 1/4`.
///
/// Writing `Du = s(A + E)` with `A` the Gram–Schmidt frame that defines `P`,
/// `|E₁| ≤ η` and `|E₂| ≤ η + 2η/(1 − η)`, so `‖E‖_F ≤ 3.8η` and the
/// symmetrized product is at most twice that.
pub const SYM_QUALITY_CONSTANT: f64 = 7.6;

#[derive(Clone, Debug)]
pub struct Theorem2Params {
    pub region: Aabb,
    pub mode: DecompositionMode,
    pub n_list: Vec<u32>,
    pub q: f64,
    /// The quality-propagated sym bound must stay below this.
    pub sym_tolerance: f64,
}

impl Theorem2Params {
    pub fn new(region: Aabb, n_list: Vec<u32>, q: f64) -> Self {
        Self {
            region,
            mode: DecompositionMode::Single,
            n_list,
            q,
            sym_tolerance: EXACT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Theorem2Level {
    pub n: u32,
    pub part_index: usize,
    pub part: Aabb,
    pub measure: f64,
    pub scale: f64,
    /// `|Ωₙ|^{1/q}/n`.
    pub edge_bound: f64,
    pub covering: Covering,
}

/// Witnesses `uₙ = |Ωₙ|^{−1/q}Σᵢ uₙᵢ` assembled from rescaled copies of an
/// orthonormal-gradient map, and the rotation field `P` that makes
/// `sym(DuₙP)` vanish.
pub struct Theorem2<M> {
    map: M,
    q: f64,
    eta: f64,
    sym_tolerance: f64,
    decomposition: DomainDecomposition,
    levels: Vec<Theorem2Level>,
}

impl<M: OrthoMap> Theorem2<M> {
    pub fn build(params: &Theorem2Params, map: M) -> Result<Self, ConstructionError> {
        check_exponent(params.q)?;
        if params.n_list.is_empty() || params.n_list.contains(&0) {
            return Err(ConstructionError::InvalidLevel);
        }
        let eta = map.quality();
        let decomposition = match params.mode {
            DecompositionMode::Single => DomainDecomposition::single(params.region),
            DecompositionMode::Slabs => DomainDecomposition::slabs(params.region, params.n_list.len())?,
        };
        let mut levels = Vec::with_capacity(params.n_list.len());
        for (i, &n) in params.n_list.iter().enumerate() {
            let part_index = if params.mode == DecompositionMode::Single { 0 } else { i };
            let part = decomposition.parts()[part_index];
            let measure = part.volume();
            let scale = measure.powf(-1.0 / params.q);
            let bound = sym_bound(eta, scale);
            if !(eta <= 0.25 && bound <= params.sym_tolerance) {
                return Err(ConstructionError::QualityBudgetExceeded {
                    eta,
                    bound,
                    tolerance: params.sym_tolerance,
                });
            }
            let edge_bound = measure.powf(1.0 / params.q) / n as f64;
            levels.push(Theorem2Level {
                n,
                part_index,
                part,
                measure,
                scale,
                edge_bound,
                covering: axis_grid_cover(&part, edge_bound)?,
            });
        }
        Ok(Self {
            map,
            q: params.q,
            eta,
            sym_tolerance: params.sym_tolerance,
            decomposition,
            levels,
        })
    }

    pub fn levels(&self) -> &[Theorem2Level] {
        &self.levels
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn sym_tolerance(&self) -> f64 {
        self.sym_tolerance
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    pub fn level(&self, n: u32) -> Result<&Theorem2Level, ConstructionError> {
        self.levels
            .iter()
            .find(|l| l.n == n)
            .ok_or(ConstructionError::UnknownLevel(n as usize))
    }

    fn owner<'a>(&'a self, level: &'a Theorem2Level, x: &Point3<f64>) -> Result<&'a Theorem2Level, ConstructionError> {
        if self.decomposition.mode() == DecompositionMode::Single {
            return Ok(level);
        }
        let i = self.decomposition.part_of(x).ok_or(crate::error::GeometryError::OutOfDomain)?;
        Ok(&self.levels[i])
    }

    /// `(uₙᵢ, gradient rows)` of the cube of `level` containing `x`, in
    /// unscaled units, or `None` on the residual.
    fn local(&self, level: &Theorem2Level, x: &Point3<f64>) -> Result<Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)>, ConstructionError> {
        match level.covering.locate(x)? {
            Location::Residual => Ok(None),
            Location::Cube { cube, .. } => {
                let h = Vector3::repeat(cube.half_edge);
                let cell = Aabb::new(cube.center - h, cube.center + h)?;
                let s = scale_translate_map(&self.map, &cell)?.eval(x);
                Ok(Some((s.value, s.d1, s.d2)))
            }
        }
    }

    pub fn eval_bundle(&self, n: u32, x: &Point3<f64>) -> Result<Bundle, ConstructionError> {
        let level = self.level(n)?;
        let owner = self.owner(level, x)?;
        let local = self.local(owner, x)?;
        let p = match &local {
            Some((_, d1, d2)) => *frame_to_rotation_projected(d1, d2)?.matrix(),
            None => Matrix3::identity(),
        };
        if !std::ptr::eq(owner, level) {
            return Ok(Bundle {
                u: Vector3::zeros(),
                du: Matrix3::zeros(),
                p,
                dup: Matrix3::zeros(),
                tag: PointTag::Inactive,
            });
        }
        let Some((value, d1, d2)) = local else {
            return Ok(Bundle {
                u: Vector3::zeros(),
                du: Matrix3::zeros(),
                p,
                dup: Matrix3::zeros(),
                tag: PointTag::Residual,
            });
        };
        let s = level.scale;
        let du = Matrix3::from_rows(&[(d1 * s).transpose(), (d2 * s).transpose(), Vector3::zeros().transpose()]);
        Ok(Bundle {
            u: value * s,
            du,
            p,
            dup: du * p,
            tag: PointTag::Interior,
        })
    }
}

/// Bound on the sym residual implied by quality `eta` at scale `s`.
pub fn sym_bound(eta: f64, scale: f64) -> f64 {
    SYM_QUALITY_CONSTANT * eta * scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm2Record {
    pub n: u32,
    pub q: f64,
    pub sym_residual_max: f64,
    pub norm_q_pow_q_lower: f64,
    pub norm_q_pow_q_upper: f64,
    /// `c/n` with `c = sup |u|` of the unit-cube map.
    pub sup_norm_bound: f64,
    pub sup_norm_observed: f64,
    pub covered_fraction: f64,
    pub seed: u64,
    pub ortho_quality_eta: f64,
    pub so3_residual_max: f64,
    /// `SYM_QUALITY_CONSTANT·η·|Ωₙ|^{−1/q}` (plus rounding allowance).
    pub sym_residual_bound: f64,
    pub part_index: usize,
    pub part_measure: f64,
    pub edge_bound: f64,
    pub norm_q_pow_q_mc: f64,
    pub norm_q_pow_q_sigma: f64,
    pub samples: u64,
}

impl Thm2Record {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(format!("n={} q={}: {what}", self.n, self.q));
            }
        };
        check(self.sym_residual_max <= self.sym_residual_bound, "sym(DuP) exceeds its quality budget");
        check(self.so3_residual_max <= EXACT_TOL, "P is not a rotation");
        check(self.sup_norm_observed <= self.sup_norm_bound * (1.0 + 1e-12), "sup norm exceeds c/n");
        let three_sigma = 3.0 * self.norm_q_pow_q_sigma;
        check(
            self.norm_q_pow_q_mc >= self.norm_q_pow_q_lower - three_sigma
                && self.norm_q_pow_q_mc <= self.norm_q_pow_q_upper + three_sigma,
            "Monte Carlo gradient norm disagrees with the certificate",
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm2Report {
    pub records: Vec<Thm2Record>,
}

impl Thm2Report {
    pub fn failures(&self) -> Vec<String> {
        self.records.iter().flat_map(Thm2Record::failures).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        crate::thm1::records_to_csv(&self.records)
    }
}

#[derive(Clone, Copy, Default)]
struct Partial {
    sym: f64,
    so3: f64,
    sup: f64,
    sum: f64,
    sq: f64,
}

/// Builds the construction for every level and samples it.
pub fn thm2_pipeline<M: OrthoMap>(
    params: &Theorem2Params,
    map: M,
    samples: usize,
    seed: u64,
) -> Result<(Theorem2<M>, Thm2Report), ConstructionError> {
    let t = Theorem2::build(params, map)?;
    let report = t.verify(samples, seed)?;
    Ok((t, report))
}

impl<M: OrthoMap> Theorem2<M> {
    pub fn verify(&self, samples: usize, seed: u64) -> Result<Thm2Report, ConstructionError> {
        let q = self.q;
        let eta = self.eta;
        let mut records = Vec::new();
        for level in &self.levels {
            let stream = rng::substream(seed ^ level.n as u64, "sampling");
            let parts = rng::par_chunks(samples, stream, |r, len| -> Result<Partial, ConstructionError> {
                let mut acc = Partial::default();
                for _ in 0..len {
                    let x = sample_box(&level.part, r);
                    let b = self.eval_bundle(level.n, &x)?;
                    let p = b.p;
                    acc.so3 = acc
                        .so3
                        .max((p.transpose() * p - Matrix3::identity()).abs().max())
                        .max((p.determinant() - 1.0).abs());
                    acc.sup = acc.sup.max(b.u.norm());
                    let f: f64 = (0..3).map(|i| b.du.row(i).norm().powf(q)).sum();
                    acc.sum += f;
                    acc.sq += f * f;
                    if b.tag == PointTag::Interior {
                        acc.sym = acc.sym.max(b.sym2().norm());
                    }
                }
                Ok(acc)
            });
            let mut acc = Partial::default();
            for p in parts {
                let p = p?;
                acc.sym = acc.sym.max(p.sym);
                acc.so3 = acc.so3.max(p.so3);
                acc.sup = acc.sup.max(p.sup);
                acc.sum += p.sum;
                acc.sq += p.sq;
            }
            let ns = samples as f64;
            let mean = acc.sum / ns;
            let var = (acc.sq / ns - mean * mean).max(0.0);
            let covered = level.covering.covered_fraction_lower();
            // |d₁|^q + |d₂|^q lies in [2(1−η)^q, 2(1+η)^q]
            let lower = 2.0 * (1.0 - eta).powf(q) * covered;
            let upper = 2.0 * (1.0 + eta).powf(q);
            records.push(Thm2Record {
                n: level.n,
                q,
                sym_residual_max: acc.sym,
                norm_q_pow_q_lower: lower,
                norm_q_pow_q_upper: upper,
                sup_norm_bound: self.map.sup_norm() / level.n as f64,
                sup_norm_observed: acc.sup,
                covered_fraction: covered,
                seed,
                ortho_quality_eta: eta,
                so3_residual_max: acc.so3,
                sym_residual_bound: sym_bound(eta, level.scale) + EXACT_TOL,
                part_index: level.part_index,
                part_measure: level.measure,
                edge_bound: level.edge_bound,
                norm_q_pow_q_mc: level.measure * mean,
                norm_q_pow_q_sigma: level.measure * (var / ns).sqrt(),
                samples: samples as u64,
            });
        }
        Ok(Thm2Report { records })
    }
}

use nalgebra::{Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::construction::{Theorem1, Theorem1Level, Theorem1Params};
use super::distance::PointTag;
use super::frame::{build_v, op_norm, p_op_bound, v_norm_bounds};
use crate::error::ConstructionError;
use crate::geometry::{Aabb, CubeId};
use crate::rng;

/// Tolerance on `‖DuP + (DuP)ᵀ‖` and `|det P − 1|` at covered points.
pub const EXACT_TOL: f64 = 1e-12;
/// Slack on the lower bound of `‖Duₙ‖_q^q` on top of the packing budget.
pub const NORM_SLACK: f64 = 1e-3;

/// Sampling budget of [`verify_construction`].
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Verification outcome for one level `n`. The first nine columns are the
/// stable public schema; the rest are diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm1Record {
    pub n: u32,
    pub q: f64,
    /// `max ‖DuₙP + (DuₙP)ᵀ‖_F` over interior samples.
    pub sym_residual_max: f64,
    pub norm_q_pow_q_lower: f64,
    pub norm_q_pow_q_upper: f64,
    /// `2/n`.
    pub sup_norm_bound: f64,
    /// Largest sampled `|u¹ₙ| + |u²ₙ|`.
    pub sup_norm_observed: f64,
    /// Certified lower bound on the doubly covered fraction of `Ωₙ`.
    pub covered_fraction: f64,
    pub seed: u64,
    pub part_index: usize,
    pub part_measure: f64,
    pub edge_bound: f64,
    /// `|Ωₙ|^{−1/q}·(h_axis + h_rot)`.
    pub sup_norm_analytic: f64,
    pub norm_q_pow_q_mc: f64,
    pub norm_q_pow_q_sigma: f64,
    pub samples: u64,
    pub interior_samples: u64,
    pub ridge_samples: u64,
    pub residual_samples: u64,
    pub det_deviation_max: f64,
    pub p_op_max: f64,
    pub p_op_bound: f64,
    pub v_norm_min: f64,
    pub v_norm_max: f64,
    pub v_norm_lower: f64,
    pub v_norm_upper: f64,
}

impl Thm1Record {
    /// Names of the claims this record fails, given the packing budget `eps`.
    pub fn failures(&self, eps: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(format!("n={} q={}: {what}", self.n, self.q));
            }
        };
        check(self.interior_samples > 0, "no interior samples");
        check(self.sym_residual_max <= EXACT_TOL, "sym(DuP) is not zero");
        check(self.det_deviation_max <= EXACT_TOL, "det P differs from 1");
        let floor = 2.0 * (1.0 - eps - NORM_SLACK);
        check(
            self.norm_q_pow_q_lower >= floor && self.norm_q_pow_q_upper <= 2.0,
            "gradient norm outside its budget",
        );
        let three_sigma = 3.0 * self.norm_q_pow_q_sigma;
        check(
            self.norm_q_pow_q_mc >= self.norm_q_pow_q_lower - three_sigma
                && self.norm_q_pow_q_mc <= self.norm_q_pow_q_upper + three_sigma,
            "Monte Carlo gradient norm disagrees with the certificate",
        );
        check(
            self.sup_norm_analytic <= self.sup_norm_bound * (1.0 + 1e-12),
            "edge bound does not imply the sup bound",
        );
        check(self.sup_norm_observed <= self.sup_norm_bound * (1.0 + 1e-12), "sup norm exceeds 2/n");
        check(self.p_op_max <= self.p_op_bound * (1.0 + 1e-9), "P exceeds its operator-norm bound");
        check(
            self.v_norm_min >= self.v_norm_lower * (1.0 - 1e-12) && self.v_norm_max <= self.v_norm_upper * (1.0 + 1e-12),
            "|v| outside its margin bounds",
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm1Report {
    pub eps: f64,
    pub records: Vec<Thm1Record>,
}

impl Thm1Report {
    pub fn failures(&self) -> Vec<String> {
        self.records.iter().flat_map(|r| r.failures(self.eps)).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

/// CSV with one row per record and the struct fields as columns.
pub fn records_to_csv<T: Serialize>(records: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("record serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

#[derive(Clone, Copy)]
struct Partial {
    sym: f64,
    det: f64,
    p_op: f64,
    v_min: f64,
    v_max: f64,
    sup: f64,
    grad_sum: f64,
    grad_sq: f64,
    interior: u64,
    ridge: u64,
    residual: u64,
}

impl Partial {
    fn new() -> Self {
        Self {
            sym: 0.0,
            det: 0.0,
            p_op: 0.0,
            v_min: f64::INFINITY,
            v_max: 0.0,
            sup: 0.0,
            grad_sum: 0.0,
            grad_sq: 0.0,
            interior: 0,
            ridge: 0,
            residual: 0,
        }
    }

    fn merge(mut self, o: &Partial) -> Self {
        self.sym = self.sym.max(o.sym);
        self.det = self.det.max(o.det);
        self.p_op = self.p_op.max(o.p_op);
        self.v_min = self.v_min.min(o.v_min);
        self.v_max = self.v_max.max(o.v_max);
        self.sup = self.sup.max(o.sup);
        self.grad_sum += o.grad_sum;
        self.grad_sq += o.grad_sq;
        self.interior += o.interior;
        self.ridge += o.ridge;
        self.residual += o.residual;
        self
    }
}

/// Uniform point in `part`.
pub(crate) fn sample_box<R: Rng>(part: &Aabb, r: &mut R) -> Point3<f64> {
    part.at(&Vector3::new(r.random(), r.random(), r.random()))
}

fn verify_level(t: &Theorem1, level: &Theorem1Level, opts: &VerifyOptions) -> Result<Thm1Record, ConstructionError> {
    let q = t.q();
    let stream = rng::substream(opts.seed ^ level.n as u64, "sampling");
    let partials = rng::par_chunks(opts.samples, stream, |r, len| -> Result<Partial, ConstructionError> {
        let mut acc = Partial::new();
        for _ in 0..len {
            let x = sample_box(&level.part, r);
            let b = t.eval_bundle(level.n, &x)?;
            let sup = b.u[0].abs() + b.u[1].abs();
            acc.sup = acc.sup.max(sup);
            let f: f64 = (0..3).map(|i| b.du.row(i).norm().powf(q)).sum();
            acc.grad_sum += f;
            acc.grad_sq += f * f;
            match b.tag {
                PointTag::Interior => {
                    acc.interior += 1;
                    acc.sym = acc.sym.max(b.sym2().norm());
                    acc.det = acc.det.max((b.p.determinant() - 1.0).abs());
                    acc.p_op = acc.p_op.max(op_norm(&b.p));
                    let g1 = b.du.row(0).transpose() / level.scale;
                    let g2 = b.du.row(1).transpose() / level.scale;
                    let v = build_v(&-g2, &g1)?.norm();
                    acc.v_min = acc.v_min.min(v);
                    acc.v_max = acc.v_max.max(v);
                }
                PointTag::Ridge => acc.ridge += 1,
                PointTag::Residual | PointTag::Inactive => acc.residual += 1,
            }
        }
        Ok(acc)
    });
    let mut acc = Partial::new();
    for p in partials {
        acc = acc.merge(&p?);
    }
    // the maximum of u¹ is attained at axis cube centres; those are not ridges of u²
    if let Some(count) = level.axis.covering().cube_count() {
        if count <= 1 << 16 {
            for (id, cube) in level.axis.covering().cubes() {
                debug_assert!(matches!(id, CubeId::Listed(_)));
                let b = t.eval_bundle(level.n, &cube.center)?;
                acc.sup = acc.sup.max(b.u[0].abs() + b.u[1].abs());
            }
        }
    }
    let n = opts.samples as f64;
    let mean = acc.grad_sum / n;
    let var = (acc.grad_sq / n - mean * mean).max(0.0);
    let (lower, upper) = level.grad_norm_pow_q_bounds();
    let margin = t.rotation().margin();
    let (v_lo, v_hi) = v_norm_bounds(margin);
    Ok(Thm1Record {
        n: level.n,
        q,
        sym_residual_max: acc.sym,
        norm_q_pow_q_lower: lower,
        norm_q_pow_q_upper: upper,
        sup_norm_bound: 2.0 / level.n as f64,
        sup_norm_observed: acc.sup,
        covered_fraction: level.doubly_covered_lower() / level.measure,
        seed: opts.seed,
        part_index: level.part_index,
        part_measure: level.measure,
        edge_bound: level.edge_bound,
        sup_norm_analytic: level.sup_bound(),
        norm_q_pow_q_mc: level.measure * mean,
        norm_q_pow_q_sigma: level.measure * (var / n).sqrt(),
        samples: opts.samples as u64,
        interior_samples: acc.interior,
        ridge_samples: acc.ridge,
        residual_samples: acc.residual,
        det_deviation_max: acc.det,
        p_op_max: acc.p_op,
        p_op_bound: p_op_bound(margin),
        v_norm_min: acc.v_min,
        v_norm_max: acc.v_max,
        v_norm_lower: v_lo,
        v_norm_upper: v_hi,
    })
}

/// Samples every level of `t` and records the three properties of the
/// witnesses together with the pointwise facts about `P`.
pub fn verify_construction(t: &Theorem1, opts: &VerifyOptions) -> Result<Thm1Report, ConstructionError> {
    let records = t
        .levels()
        .iter()
        .map(|l| verify_level(t, l, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Thm1Report { eps: t.eps(), records })
}

/// Builds the construction on the unit cube and verifies it.
pub fn verify_thm1(n_list: &[u32], q: f64, eps: f64, seed: u64) -> Result<Thm1Report, ConstructionError> {
    let params = Theorem1Params::new(Aabb::unit(), n_list.to_vec(), q, eps).with_seed(seed);
    let t = Theorem1::build(&params)?;
    verify_construction(&t, &VerifyOptions { samples: 200_000, seed })
}

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::norms::{integrate_many, row_norm_pow, sym, Sampler};
use crate::error::{AnalysisError, ConstructionError};
use crate::geometry::Aabb;
use crate::thm1::{Bundle, PointTag, Theorem1};
use crate::thm2::{OrthoMap, Theorem2};

/// A displacement field `u` together with a coefficient field `P`, both
/// supported in [`Witness::region`].
pub trait Witness: Sync {
    fn region(&self) -> Aabb;

    fn eval(&self, x: &Point3<f64>) -> Result<Bundle, AnalysisError>;

    /// Level index reported alongside the quotient.
    fn level(&self) -> u32 {
        0
    }

    /// Certified bounds on `‖Du‖_q^q`, when known.
    fn grad_norm_pow_q(&self, _q: f64) -> Option<(f64, f64)> {
        None
    }

    /// Certified upper bound on `‖sym(DuP)‖_q^q`, when known.
    fn sym_budget_pow_q(&self, _q: f64) -> Option<f64> {
        None
    }

    /// Analytic bound on `sup |u|`, when known.
    fn sup_bound(&self) -> Option<f64> {
        None
    }
}

/// The witness `uₙ` of the first counterexample with its coefficient field.
pub struct Theorem1Witness<'a> {
    pub construction: &'a Theorem1,
    pub n: u32,
}

impl<'a> Theorem1Witness<'a> {
    pub fn new(construction: &'a Theorem1, n: u32) -> Result<Self, ConstructionError> {
        construction.level(n)?;
        Ok(Self { construction, n })
    }
}

impl Witness for Theorem1Witness<'_> {
    fn region(&self) -> Aabb {
        self.construction.level(self.n).expect("checked in new").part
    }

    fn eval(&self, x: &Point3<f64>) -> Result<Bundle, AnalysisError> {
        Ok(self.construction.eval_bundle(self.n, x)?)
    }

    fn level(&self) -> u32 {
        self.n
    }

    fn grad_norm_pow_q(&self, q: f64) -> Option<(f64, f64)> {
        let level = self.construction.level(self.n).ok()?;
        (q == self.construction.q()).then(|| level.grad_norm_pow_q_bounds())
    }

    /// `sym(DuₙP)` vanishes off the residual sets. There `DuₙP` has a single
    /// nonzero row of length at most `c = |Ωₙ|^{−1/q}‖filler‖`, and
    /// `Σⱼ|rowⱼ(sym)|^q ≤ (c/2)^q(2^q + 2)`.
    fn sym_budget_pow_q(&self, q: f64) -> Option<f64> {
        let level = self.construction.level(self.n).ok()?;
        if q != self.construction.q() {
            return None;
        }
        let residual = level.axis.covering().residual_measure_bound() + level.rotated.covering().residual_measure_bound();
        let c = level.scale * crate::thm1::op_norm(self.construction.filler());
        Some(residual * (0.5 * c).powf(q) * (2f64.powf(q) + 2.0))
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(2.0 / self.n as f64)
    }
}

/// The witness of the second counterexample.
pub struct Theorem2Witness<'a, M> {
    pub construction: &'a Theorem2<M>,
    pub n: u32,
}

impl<M: OrthoMap> Witness for Theorem2Witness<'_, M> {
    fn region(&self) -> Aabb {
        self.construction.level(self.n).expect("level exists").part
    }

    fn eval(&self, x: &Point3<f64>) -> Result<Bundle, AnalysisError> {
        Ok(self.construction.eval_bundle(self.n, x)?)
    }

    fn level(&self) -> u32 {
        self.n
    }

    fn sup_bound(&self) -> Option<f64> {
        Some(self.construction.map().sup_norm() / self.n as f64)
    }
}

/// A witness given by closures: `field(x) = (u, Du)` and `coefficient(x) = P`.
pub struct FnWitness<F, G> {
    pub region: Aabb,
    pub field: F,
    pub coefficient: G,
}

impl<F, G> Witness for FnWitness<F, G>
where
    F: Fn(&Point3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Sync,
    G: Fn(&Point3<f64>) -> Matrix3<f64> + Sync,
{
    fn region(&self) -> Aabb {
        self.region
    }

    fn eval(&self, x: &Point3<f64>) -> Result<Bundle, AnalysisError> {
        let (u, du) = (self.field)(x);
        let p = (self.coefficient)(x);
        Ok(Bundle {
            u,
            du,
            p,
            dup: du * p,
            tag: PointTag::Interior,
        })
    }
}

/// Parts of `(‖sym(DuP)‖_q + λ^{1/q}‖u‖_q)/‖Du‖_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub n: u32,
    pub q: f64,
    pub lambda: f64,
    /// `‖sym(DuP)‖_q` (sampled).
    pub sym_norm: f64,
    /// `‖DuP + (DuP)ᵀ‖_q = 2‖sym(DuP)‖_q`.
    pub sym2_norm: f64,
    pub u_norm_q: f64,
    /// Largest sampled `|u|`.
    pub u_norm_sup: f64,
    pub du_norm_q: f64,
    /// `(‖sym(DuP)‖_q + λ^{1/q}‖u‖_q)/‖Du‖_q`.
    pub k: f64,
    /// Same with `‖DuP + (DuP)ᵀ‖_q` in the numerator.
    pub k_doubled: f64,
    /// `(‖sym(DuP)‖_q + λ^{1/q}‖u‖_∞)/‖Du‖_q`, when requested.
    pub k_sup: Option<f64>,
    /// Certified upper bound on `‖sym(DuP)‖_q` (sampling misses null sets).
    pub sym_budget: Option<f64>,
    /// Sampling uncertainty of `k` (three standard errors, propagated).
    pub error_budget: f64,
    /// `(budget + λ^{1/q}·sup|u|·|Ω|^{1/q})/‖Du‖_q` from analytic bounds.
    pub k_bound: Option<f64>,
    pub samples: u64,
}

/// Evaluates the quotient of a witness. `‖Du‖_q` uses the certified lower
/// bound when the witness provides one.
pub fn korn_quotient<W: Witness + ?Sized>(
    w: &W,
    q: f64,
    lambda: f64,
    sup_mode: bool,
    sampler: &Sampler,
) -> Result<QuotientReport, AnalysisError> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(ConstructionError::InvalidExponent(q).into());
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(AnalysisError::InvalidParameter {
            name: "lambda",
            reason: format!("must be nonnegative, got {lambda}"),
        });
    }
    let region = w.region();
    let m = integrate_many::<4, AnalysisError, _>(
        &region,
        |x| {
            let b = w.eval(x)?;
            Ok([
                row_norm_pow(&sym(&b.dup), q),
                b.u.norm().powf(q),
                row_norm_pow(&b.du, q),
                b.u.norm(),
            ])
        },
        sampler,
    )?;
    let root = |v: f64| v.max(0.0).powf(1.0 / q);
    let sym_norm = root(m.integral[0]);
    let u_norm_q = root(m.integral[1]);
    let du_pow = match w.grad_norm_pow_q(q) {
        Some((lower, _)) => lower,
        None => m.integral[2],
    };
    if !(du_pow > 0.0) {
        return Err(AnalysisError::DegenerateWitness);
    }
    let du_norm_q = root(du_pow);
    let lq = lambda.powf(1.0 / q);
    let k = (sym_norm + lq * u_norm_q) / du_norm_q;
    let k_doubled = (2.0 * sym_norm + lq * u_norm_q) / du_norm_q;
    let u_norm_sup = m.max_abs[3];
    let k_sup = sup_mode.then(|| (sym_norm + lq * u_norm_sup) / du_norm_q);
    let sym_budget = w.sym_budget_pow_q(q).map(root);
    // first-order propagation of the sampling errors through the q-th roots
    let d = |v: f64, e: f64| if v > 0.0 { root(v) * (3.0 * e) / (q * v) } else { root(3.0 * e) };
    let mut error_budget = (d(m.integral[0], m.std_error[0]) + lq * d(m.integral[1], m.std_error[1])) / du_norm_q;
    if w.grad_norm_pow_q(q).is_none() {
        error_budget += k * d(m.integral[2], m.std_error[2]) / du_norm_q;
    }
    let k_bound = w.sup_bound().map(|s| {
        (sym_budget.unwrap_or(sym_norm) + lq * s * region.volume().powf(1.0 / q)) / du_norm_q
    });
    Ok(QuotientReport {
        n: w.level(),
        q,
        lambda,
        sym_norm,
        sym2_norm: 2.0 * sym_norm,
        u_norm_q,
        u_norm_sup,
        du_norm_q,
        k,
        k_doubled,
        k_sup,
        sym_budget,
        error_budget,
        k_bound,
        samples: sampler.samples as u64,
    })
}

/// Least-squares fit `log y = slope·log x + intercept`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `u = (sin πx sin πy sin πz)·(1, 2, −1)` on the unit cube, with `P = I`.
    fn bump() -> FnWitness<impl Fn(&Point3<f64>) -> (Vector3<f64>, Matrix3<f64>) + Sync, impl Fn(&Point3<f64>) -> Matrix3<f64> + Sync> {
        let dir = Vector3::new(1.0, 2.0, -1.0);
        FnWitness {
            region: Aabb::unit(),
            field: move |x: &Point3<f64>| {
                let (sx, sy, sz) = ((PI * x.x).sin(), (PI * x.y).sin(), (PI * x.z).sin());
                let (cx, cy, cz) = ((PI * x.x).cos(), (PI * x.y).cos(), (PI * x.z).cos());
                let g = Vector3::new(cx * sy * sz, sx * cy * sz, sx * sy * cz) * PI;
                (dir * (sx * sy * sz), dir * g.transpose())
            },
            coefficient: |_: &Point3<f64>| Matrix3::identity(),
        }
    }

    #[test]
    fn smooth_field_with_identity_is_coercive() {
        let s = Sampler {
            samples: 200_000,
            strata: 8,
            seed: 1,
        };
        let r = korn_quotient(&bump(), 2.0, 0.0, false, &s).unwrap();
        assert!(r.k >= 0.5f64.sqrt() - 1e-2, "k = {}", r.k);
        assert!(r.k <= 1.0);
    }

    #[test]
    fn zero_field_is_degenerate() {
        let w = FnWitness {
            region: Aabb::unit(),
            field: |_: &Point3<f64>| (Vector3::zeros(), Matrix3::zeros()),
            coefficient: |_: &Point3<f64>| Matrix3::identity(),
        };
        let s = Sampler {
            samples: 1000,
            strata: 2,
            seed: 0,
        };
        assert_eq!(korn_quotient(&w, 2.0, 1.0, true, &s), Err(AnalysisError::DegenerateWitness));
    }

    #[test]
    fn fit_recovers_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.0)).collect();
        let (slope, b) = loglog_fit(&xs, &ys);
        assert!((slope + 1.0).abs() < 1e-12 && (b - 3f64.ln()).abs() < 1e-12);
    }
}

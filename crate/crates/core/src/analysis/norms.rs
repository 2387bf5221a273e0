use nalgebra::{Matrix3, Point3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;
use crate::rng;

/// `Σᵢ |pᵢ|^q` over the rows `pᵢ` of `m` (Euclidean row norms).
pub fn row_norm_pow(m: &Matrix3<f64>, q: f64) -> f64 {
    (0..3).map(|i| m.row(i).norm().powf(q)).sum()
}

/// `sym X = (X + Xᵀ)/2`.
pub fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// An integral, or an `L^q` norm raised to the power `q`, with its
/// estimated error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub q: f64,
    /// `‖f‖_q^q`.
    pub value_pow_q: f64,
    /// Three standard errors of `value_pow_q`; zero when exact.
    pub error_bound: f64,
    pub samples: u64,
    pub exact: bool,
}

impl NormReport {
    pub fn exact(q: f64, value_pow_q: f64) -> Self {
        Self {
            q,
            value_pow_q,
            error_bound: 0.0,
            samples: 0,
            exact: true,
        }
    }

    /// `‖f‖_q`.
    pub fn value(&self) -> f64 {
        self.value_pow_q.max(0.0).powf(1.0 / self.q)
    }

    /// Upper end of the confidence interval of `‖f‖_q`.
    pub fn upper(&self) -> f64 {
        (self.value_pow_q + self.error_bound).max(0.0).powf(1.0 / self.q)
    }

    pub fn lower(&self) -> f64 {
        (self.value_pow_q - self.error_bound).max(0.0).powf(1.0 / self.q)
    }
}

/// Stratified Monte Carlo options: `strata³` equal sub-boxes, the samples
/// spread evenly over them.
#[derive(Clone, Copy, Debug)]
pub struct Sampler {
    pub samples: usize,
    pub strata: usize,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            strata: 16,
            seed: 0,
        }
    }
}

/// Per-component sums of a stratified sampling pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<const N: usize> {
    /// Estimates of `∫_region fᵢ`.
    pub integral: [f64; N],
    /// Standard errors of the estimates.
    pub std_error: [f64; N],
    /// Largest sampled `|fᵢ|`.
    pub max_abs: [f64; N],
}

/// `∫_region fᵢ` for `N` integrands sharing one stratified sample: the box
/// is cut into `strata³` cells, each cell gets the same number of points
/// (at least two) from its own random stream.
pub fn integrate_many<const N: usize, E, F>(region: &Aabb, f: F, sampler: &Sampler) -> Result<Moments<N>, E>
where
    E: Send,
    F: Fn(&Point3<f64>) -> Result<[f64; N], E> + Sync,
{
    use rayon::prelude::*;
    let k = sampler.strata.max(1);
    let cells = k * k * k;
    let per = sampler.samples.div_ceil(cells).max(2);
    let cell_volume = region.volume() / cells as f64;
    let inv = 1.0 / k as f64;
    let stream = rng::substream(sampler.seed, "sampling");
    let parts: Vec<Result<([f64; N], [f64; N], [f64; N]), E>> = (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::chunk_rng(stream, c as u64);
            let base = Vector3::new((c % k) as f64, ((c / k) % k) as f64, (c / (k * k)) as f64);
            let (mut s, mut s2, mut mx) = ([0.0; N], [0.0; N], [0.0f64; N]);
            for _ in 0..per {
                let t = (base + Vector3::new(r.random(), r.random(), r.random())) * inv;
                let v = f(&region.at(&t))?;
                for i in 0..N {
                    s[i] += v[i];
                    s2[i] += v[i] * v[i];
                    mx[i] = mx[i].max(v[i].abs());
                }
            }
            let mut mean = [0.0; N];
            let mut var = [0.0; N];
            let pf = per as f64;
            for i in 0..N {
                let m = s[i] / pf;
                let v = ((s2[i] / pf - m * m) * pf / (pf - 1.0)).max(0.0);
                mean[i] = cell_volume * m;
                var[i] = cell_volume * cell_volume * v / pf;
            }
            Ok((mean, var, mx))
        })
        .collect();
    let mut out = Moments {
        integral: [0.0; N],
        std_error: [0.0; N],
        max_abs: [0.0; N],
    };
    for p in parts {
        let (m, v, mx) = p?;
        for i in 0..N {
            out.integral[i] += m[i];
            out.std_error[i] += v[i];
            out.max_abs[i] = out.max_abs[i].max(mx[i]);
        }
    }
    for e in &mut out.std_error {
        *e = e.sqrt();
    }
    Ok(out)
}

/// `∫_region f` by stratified sampling; returns the estimate and its standard
/// error.
pub fn integrate_stratified<F>(region: &Aabb, f: F, sampler: &Sampler) -> (f64, f64)
where
    F: Fn(&Point3<f64>) -> f64 + Sync,
{
    let m = integrate_many::<1, std::convert::Infallible, _>(region, |x| Ok([f(x)]), sampler)
        .unwrap_or_else(|e| match e {});
    (m.integral[0], m.std_error[0])
}

/// `‖f‖_q^q` under the row-wise convention for a matrix field.
pub fn lq_norm<F>(region: &Aabb, f: F, q: f64, sampler: &Sampler) -> NormReport
where
    F: Fn(&Point3<f64>) -> Matrix3<f64> + Sync,
{
    let (value, se) = integrate_stratified(region, |x| row_norm_pow(&f(x), q), sampler);
    NormReport {
        q,
        value_pow_q: value,
        error_bound: 3.0 * se,
        samples: sampler.samples as u64,
        exact: false,
    }
}

/// `‖v‖_q^q` for a vector field (Euclidean pointwise norm).
pub fn lq_norm_vector<F>(region: &Aabb, f: F, q: f64, sampler: &Sampler) -> NormReport
where
    F: Fn(&Point3<f64>) -> Vector3<f64> + Sync,
{
    let (value, se) = integrate_stratified(region, |x| f(x).norm().powf(q), sampler);
    NormReport {
        q,
        value_pow_q: value,
        error_bound: 3.0 * se,
        samples: sampler.samples as u64,
        exact: false,
    }
}

/// Exact `‖f‖_q^q` for a field that is constant on finitely many disjoint
/// pieces of known measure and zero elsewhere.
pub fn piecewise_constant_norm(pieces: &[(f64, Matrix3<f64>)], q: f64) -> NormReport {
    NormReport::exact(q, pieces.iter().map(|(measure, m)| measure * row_norm_pow(m, q)).sum())
}

/// `∫_Q dist(x, ∂Q)^q dx = a³ (a/2)^q · 6/((q+1)(q+2)(q+3))` for a cube of
/// edge `a`.
pub fn cube_distance_moment(edge: f64, q: f64) -> f64 {
    edge.powi(3) * (0.5 * edge).powf(q) * 6.0 / ((q + 1.0) * (q + 2.0) * (q + 3.0))
}

//! Energy of a Cosserat configuration `(φ, R̄)` sampled on a regular grid:
//! `∫ μ|sym(R̄ᵀDφ − 1)|² + (λ/2) tr(sym(R̄ᵀDφ − 1))² + W_curv(Curl R̄)`.
//! Derivatives are central differences, one-sided on the boundary; the
//! integral uses the product trapezoid rule.

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::sym;
use crate::error::AnalysisError;
use crate::geometry::Aabb;

/// Tolerance on `R̄ᵀR̄ = 1` and `det R̄ = 1` for the rotation samples.
pub const ROTATION_TOL: f64 = 1e-9;

/// Regular sample lattice with `dims[d] ≥ 2` points along axis `d`,
/// including both ends. Samples are stored `i` fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub region: Aabb,
    pub dims: [usize; 3],
}

impl SampleGrid {
    pub fn new(region: Aabb, dims: [usize; 3]) -> Result<Self, AnalysisError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(AnalysisError::InvalidParameter {
                name: "grid",
                reason: format!("{dims:?}: need at least two points per axis"),
            });
        }
        Ok(Self { region, dims })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> Vector3<f64> {
        let s = self.region.sides();
        Vector3::new(
            s.x / (self.dims[0] - 1) as f64,
            s.y / (self.dims[1] - 1) as f64,
            s.z / (self.dims[2] - 1) as f64,
        )
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn point(&self, idx: usize) -> Point3<f64> {
        let c = self.coords(idx);
        self.region.lo() + self.spacing().component_mul(&Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64))
    }

    pub fn points(&self) -> Vec<Point3<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Product trapezoid weight of sample `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        let h = self.spacing();
        (0..3)
            .map(|d| if c[d] == 0 || c[d] == self.dims[d] - 1 { 0.5 * h[d] } else { h[d] })
            .product()
    }

    /// Finite-difference `∂_d f` at sample `idx`.
    fn partial<T>(&self, f: &[T], idx: usize, d: usize) -> T
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let c = self.coords(idx);
        let h = self.spacing()[d];
        let shifted = |delta: isize| {
            let mut cc = c;
            cc[d] = (c[d] as isize + delta) as usize;
            f[self.index(cc)]
        };
        if c[d] == 0 {
            (shifted(1) - f[idx]) * (1.0 / h)
        } else if c[d] == self.dims[d] - 1 {
            (f[idx] - shifted(-1)) * (1.0 / h)
        } else {
            (shifted(1) - shifted(-1)) * (0.5 / h)
        }
    }

    /// Discrete `Dφ` at every sample. The identity part is handled exactly:
    /// differences are taken of `φ − x`.
    pub fn deformation_gradient(&self, phi: &[Vector3<f64>]) -> Vec<Matrix3<f64>> {
        let disp: Vec<Vector3<f64>> = phi.iter().enumerate().map(|(i, p)| p - self.point(i).coords).collect();
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let cols = [0, 1, 2].map(|d| self.partial(&disp, i, d));
                Matrix3::identity() + Matrix3::from_columns(&cols)
            })
            .collect()
    }

    /// Row-wise curl of a matrix field: row `i` of the result is `∇ × (row i)`.
    pub fn curl(&self, r: &[Matrix3<f64>]) -> Vec<Matrix3<f64>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let d = [0, 1, 2].map(|k| self.partial(r, i, k));
                // (∇ × v)ₐ with v the row: ∂₁v₂ − ∂₂v₁ etc., per row
                Matrix3::from_fn(|row, comp| {
                    let (a, b) = ((comp + 1) % 3, (comp + 2) % 3);
                    d[a][(row, b)] - d[b][(row, a)]
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosseratParams {
    pub mu_e: f64,
    pub lambda_e: f64,
    pub l_c: f64,
    pub q_c: f64,
}

impl CosseratParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |name, reason: &str| Err(AnalysisError::InvalidParameter { name, reason: reason.into() });
        if !(self.mu_e > 0.0) {
            return bad("mu_e", "must be positive");
        }
        if !(3.0 * self.lambda_e + 2.0 * self.mu_e > 0.0) {
            return bad("lambda_e", "needs 3λ + 2μ > 0");
        }
        if !(self.l_c >= 0.0) || !self.l_c.is_finite() {
            return bad("l_c", "must be finite and nonnegative");
        }
        if !(self.q_c >= 1.0) || !self.q_c.is_finite() {
            return bad("q_c", "must be finite and at least 1");
        }
        Ok(())
    }
}

impl Default for CosseratParams {
    fn default() -> Self {
        Self {
            mu_e: 1.0,
            lambda_e: 1.0,
            l_c: 0.1,
            q_c: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosseratEnergy {
    pub elastic: f64,
    pub curvature: f64,
    pub total: f64,
}

/// Pointwise elastic density for `F = Dφ`.
pub fn elastic_density(f: &Matrix3<f64>, rbar: &Matrix3<f64>, p: &CosseratParams) -> f64 {
    let e = sym(&(rbar.transpose() * f - Matrix3::identity()));
    p.mu_e * e.norm_squared() + 0.5 * p.lambda_e * e.trace().powi(2)
}

/// Pointwise curvature density for `Curl R̄ = c`.
pub fn curvature_density(c: &Matrix3<f64>, p: &CosseratParams) -> f64 {
    let n2 = c.norm_squared();
    p.mu_e * (0.5 * p.l_c * p.l_c * n2 + p.l_c.powf(p.q_c) / p.q_c * n2.sqrt().powf(p.q_c))
}

/// Checks every rotation sample; `max(‖R̄ᵀR̄ − 1‖_max, |det R̄ − 1|)` must not
/// exceed [`ROTATION_TOL`].
pub fn check_rotations(rbar: &[Matrix3<f64>]) -> Result<(), AnalysisError> {
    for (index, r) in rbar.iter().enumerate() {
        let defect = (r.transpose() * r - Matrix3::identity()).abs().max().max((r.determinant() - 1.0).abs());
        if !(defect <= ROTATION_TOL) {
            return Err(AnalysisError::InvalidRotationField { index, defect });
        }
    }
    Ok(())
}

fn check_lengths(grid: &SampleGrid, phi: usize, rbar: usize) -> Result<(), AnalysisError> {
    if phi != grid.len() || rbar != grid.len() {
        return Err(AnalysisError::InvalidParameter {
            name: "samples",
            reason: format!("grid has {} points, got {phi} deformation and {rbar} rotation samples", grid.len()),
        });
    }
    Ok(())
}

pub fn cosserat_energy(
    grid: &SampleGrid,
    phi: &[Vector3<f64>],
    rbar: &[Matrix3<f64>],
    params: &CosseratParams,
) -> Result<CosseratEnergy, AnalysisError> {
    params.validate()?;
    check_lengths(grid, phi.len(), rbar.len())?;
    check_rotations(rbar)?;
    let f = grid.deformation_gradient(phi);
    let curl = grid.curl(rbar);
    let parts: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let w = grid.weight(i);
            (w * elastic_density(&f[i], &rbar[i], params), w * curvature_density(&curl[i], params))
        })
        .collect();
    let elastic: f64 = parts.iter().map(|p| p.0).sum();
    let curvature: f64 = parts.iter().map(|p| p.1).sum();
    Ok(CosseratEnergy {
        elastic,
        curvature,
        total: elastic + curvature,
    })
}

/// Both sides of `∫|R̄ᵀDφ + DφᵀR̄|² = 4∫|sym(Dφ R̄ᵀ)|²`, the second being four
/// times the coercivity form with coefficient `P = R̄ᵀ` evaluated at `φ`.
pub fn four_a_identity(
    grid: &SampleGrid,
    phi: &[Vector3<f64>],
    rbar: &[Matrix3<f64>],
) -> Result<(f64, f64), AnalysisError> {
    check_lengths(grid, phi.len(), rbar.len())?;
    check_rotations(rbar)?;
    let f = grid.deformation_gradient(phi);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..grid.len() {
        let w = grid.weight(i);
        let rf = rbar[i].transpose() * f[i];
        lhs += w * (rf + rf.transpose()).norm_squared();
        rhs += w * 4.0 * sym(&(f[i] * rbar[i].transpose())).norm_squared();
    }
    Ok((lhs, rhs))
}

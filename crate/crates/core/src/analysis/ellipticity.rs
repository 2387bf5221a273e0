use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;

pub type CVector3 = nalgebra::Vector3<Complex64>;

/// Eigenvalues of a symmetric 3×3 matrix in ascending order, from the
/// characteristic polynomial (trigonometric form).
pub fn sym3_eigenvalues(a: &Matrix3<f64>) -> [f64; 3] {
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    let tr = a.trace();
    if p1 == 0.0 {
        let mut d = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let q = tr / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (a - Matrix3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [lo, tr - hi - lo, hi]
}

/// `|sym(ξ ⊗ Pᵀη)|²`.
pub fn lh_form(p: &Matrix3<f64>, xi: &Vector3<f64>, eta: &Vector3<f64>) -> f64 {
    let b = p.tr_mul(eta);
    let m = xi * b.transpose();
    ((m + m.transpose()) * 0.5).norm_squared()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhReport {
    /// `min |sym(ξ⊗Pᵀη)|² / (½λ_min(PPᵀ)|ξ|²|η|²)`.
    pub min_ratio: f64,
    pub lambda_min: f64,
    pub samples: u64,
}

fn unit_normal<R: Rng + ?Sized>(r: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| r.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Samples `samples` pairs of unit vectors uniformly on the sphere and adds
/// the extremal pair (`η` the eigenvector of `λ_min(PPᵀ)`, `ξ ⊥ Pᵀη`), at
/// which the ratio equals 1.
pub fn lh_check<R: Rng + ?Sized>(p: &Matrix3<f64>, samples: usize, r: &mut R) -> Result<LhReport, AnalysisError> {
    if !(p.determinant() > 0.0) {
        return Err(AnalysisError::InvalidSample("P must have positive determinant"));
    }
    let ppt = p * p.transpose();
    let lambda_min = sym3_eigenvalues(&ppt)[0];
    let ratio = |xi: &Vector3<f64>, eta: &Vector3<f64>| {
        lh_form(p, xi, eta) / (0.5 * lambda_min * xi.norm_squared() * eta.norm_squared())
    };
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        min_ratio = min_ratio.min(ratio(&unit_normal(r), &unit_normal(r)));
    }
    let eig = nalgebra::SymmetricEigen::new(ppt);
    let k = eig.eigenvalues.imin();
    let eta = eig.eigenvectors.column(k).into_owned();
    let b = p.tr_mul(&eta);
    let helper = if b.x.abs() < 0.9 * b.norm() { Vector3::x() } else { Vector3::y() };
    let xi = b.cross(&helper).normalize();
    min_ratio = min_ratio.min(ratio(&xi, &eta));
    Ok(LhReport {
        min_ratio,
        lambda_min,
        samples: samples as u64 + 1,
    })
}

/// `‖sym(a ⊗ b)‖_F` for complex vectors (bilinear, no conjugation).
pub fn complex_sym_norm(a: &CVector3, b: &CVector3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += (0.5 * (a[i] * b[j] + a[j] * b[i])).norm_sqr();
        }
    }
    s.sqrt()
}

/// `‖sym(ξ ⊗ Pᵀη)‖` for normalized nonzero `ξ`, `η`.
pub fn complex_lh_norm(p: &Matrix3<f64>, xi: &CVector3, eta: &CVector3) -> Result<f64, AnalysisError> {
    let (nx, ne) = (xi.norm(), eta.norm());
    if !(nx > 0.0) {
        return Err(AnalysisError::InvalidSample("xi must be nonzero"));
    }
    if !(ne > 0.0) {
        return Err(AnalysisError::InvalidSample("eta must be nonzero"));
    }
    let pc = p.map(|v| Complex64::new(v, 0.0));
    let b = pc.tr_mul(&(eta / Complex64::new(ne, 0.0)));
    Ok(complex_sym_norm(&(xi / Complex64::new(nx, 0.0)), &b))
}

/// Explicit nonzero entry of `sym(a ⊗ b)` for nonzero complex `a`, `b`.
///
/// If `sym(a⊗b) = 0` then `aᵢbᵢ = 0` for every `i` and `aᵢbⱼ = −aⱼbᵢ`.
/// Taking `i` with `aᵢ ≠ 0` forces `bᵢ = 0` and then `bⱼ = 0` for all `j`.
/// Quantitatively, with `i` the largest entry of `a`: either `|bᵢ| ≥ |b|/4`
/// and the diagonal entry is at least `|a||b|/(4√3)`, or some `j ≠ i` has
/// `|bⱼ| ≥ 0.68|b|` and entry `(i, j)` is at least `|a||b|/8`.
pub fn sym_nonzero_entry(a: &CVector3, b: &CVector3) -> (usize, usize, f64) {
    let i = (0..3).fold(0, |m, k| if a[k].norm() > a[m].norm() { k } else { m });
    let diag = (a[i] * b[i]).norm();
    let (j, off) = (0..3)
        .filter(|&j| j != i)
        .map(|j| (j, (0.5 * (a[i] * b[j] + a[j] * b[i])).norm()))
        .fold((i, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
    if diag >= off {
        (i, i, diag)
    } else {
        (i, j, off)
    }
}

fn random_complex_unit<R: Rng + ?Sized>(r: &mut R) -> CVector3 {
    loop {
        let v = CVector3::from_fn(|_, _| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)));
        let n = v.norm();
        if n > 1e-12 {
            return v / Complex64::new(n, 0.0);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexReport {
    /// Smallest sampled `‖sym(ξ⊗Pᵀη)‖` over normalized pairs.
    pub min_norm: f64,
    /// `σ_min(P)/√2`, a lower bound from `|sym(a⊗b)|² ≥ ½|a|²|b|²`.
    pub certified_lower: f64,
    pub samples: u64,
}

/// Random normalized complex pairs, followed by a local search from the
/// worst pair and the analytic minimizer (`η` the smallest right singular
/// direction of `Pᵀ`, `ξ` real and orthogonal to `Pᵀη`).
pub fn complex_ellipticity_check<R: Rng + ?Sized>(
    p: &Matrix3<f64>,
    samples: usize,
    r: &mut R,
) -> Result<ComplexReport, AnalysisError> {
    if !(p.determinant().abs() > 0.0) {
        return Err(AnalysisError::InvalidSample("P must be invertible"));
    }
    let mut best = (f64::INFINITY, CVector3::zeros(), CVector3::zeros());
    for _ in 0..samples {
        let (xi, eta) = (random_complex_unit(r), random_complex_unit(r));
        let v = complex_lh_norm(p, &xi, &eta)?;
        if v < best.0 {
            best = (v, xi, eta);
        }
    }
    // adversarial refinement around the worst sample
    let mut step = 0.1;
    for _ in 0..2000 {
        let xi = best.1 + random_complex_unit(r) * Complex64::new(step, 0.0);
        let eta = best.2 + random_complex_unit(r) * Complex64::new(step, 0.0);
        let v = complex_lh_norm(p, &xi, &eta)?;
        if v < best.0 {
            best = (v, xi / Complex64::new(xi.norm(), 0.0), eta / Complex64::new(eta.norm(), 0.0));
        } else {
            step = (step * 0.995).max(1e-6);
        }
    }
    let svd = p.transpose().svd(true, true);
    let k = svd.singular_values.imin();
    let sigma_min = svd.singular_values[k];
    let v_t = svd.v_t.expect("requested");
    let eta = v_t.row(k).transpose();
    let b = p.tr_mul(&eta);
    let helper = if b.x.abs() < 0.9 * b.norm() { Vector3::x() } else { Vector3::y() };
    let xi = b.cross(&helper).normalize();
    let c = |v: &Vector3<f64>| v.map(|t| Complex64::new(t, 0.0));
    let analytic = complex_lh_norm(p, &c(&xi), &c(&eta))?;
    Ok(ComplexReport {
        min_norm: best.0.min(analytic),
        certified_lower: sigma_min / 2f64.sqrt(),
        samples: samples as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rotation3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigenvalues_match_library() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let m = Matrix3::from_fn(|_, _| r.random_range(-1.0..1.0));
            let s = m + m.transpose();
            let mut lib: Vec<f64> = nalgebra::SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
            lib.sort_by(f64::total_cmp);
            let ours = sym3_eigenvalues(&s);
            for k in 0..3 {
                assert!((ours[k] - lib[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_on_equal_directions() {
        let ratio = lh_form(&Matrix3::identity(), &Vector3::x(), &Vector3::x());
        assert_eq!(ratio, 1.0);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let rep = lh_check(&Matrix3::identity(), 1000, &mut r).unwrap();
        assert!((rep.min_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_satisfy_the_bound() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let p = *Rotation3::random(&mut r).matrix();
        let rep = lh_check(&p, 10_000, &mut r).unwrap();
        assert!(rep.min_ratio >= 1.0 - 1e-9);
        assert!((rep.lambda_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_diagonal_example() {
        let xi = CVector3::new(Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default());
        let eta = CVector3::new(Complex64::new(0.0, 1.0), Complex64::default(), Complex64::default());
        assert!((complex_lh_norm(&Matrix3::identity(), &xi, &eta).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            complex_lh_norm(&Matrix3::identity(), &CVector3::zeros(), &eta),
            Err(AnalysisError::InvalidSample("xi must be nonzero"))
        );
    }

    #[test]
    fn complex_norm_identity() {
        // |sym(a⊗b)|² = ½|a|²|b|² + ½|Σ aᵢ conj(bᵢ)|²
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random_complex_unit(&mut r);
            let b = random_complex_unit(&mut r);
            let inner: Complex64 = (0..3).map(|i| a[i] * b[i].conj()).sum();
            let want = 0.5 + 0.5 * inner.norm_sqr();
            assert!((complex_sym_norm(&a, &b).powi(2) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn index_argument_on_near_null_pairs() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        for k in 0..2000 {
            let a = random_complex_unit(&mut r);
            // b close to the "antisymmetric partner" directions of a
            let tweak = random_complex_unit(&mut r) * Complex64::new(10f64.powi(-(k % 8)), 0.0);
            let b = a.map(|c| c * Complex64::new(0.0, 1.0)) + tweak;
            let (i, j, v) = sym_nonzero_entry(&a, &b);
            let exact = (0.5 * (a[i] * b[j] + a[j] * b[i])).norm();
            assert!((v - exact).abs() <= 1e-15 * (1.0 + exact));
            assert!(v >= a.norm() * b.norm() / 8.0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn complex_check_on_rotation() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let p = *Rotation3::random(&mut r).matrix();
        let rep = complex_ellipticity_check(&p, 2000, &mut r).unwrap();
        assert!(rep.min_norm > 1e-6);
        assert!(rep.min_norm >= rep.certified_lower - 1e-12);
    }
}

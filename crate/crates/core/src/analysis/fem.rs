//! Trilinear finite elements on a uniform box mesh with zero boundary values.
//! Unknowns are the three displacement components at interior nodes,
//! interleaved: `dof = 3·node + component`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::{CsrMatrix, Pattern};
use crate::error::AnalysisError;
use crate::geometry::Aabb;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    region: Aabb,
    m: usize,
}

impl Mesh {
    /// `m` cells per axis.
    pub fn new(region: Aabb, m: usize) -> Result<Self, AnalysisError> {
        if m == 0 {
            return Err(AnalysisError::InvalidParameter {
                name: "mesh",
                reason: "needs at least one cell per axis".into(),
            });
        }
        Ok(Self { region, m })
    }

    pub fn region(&self) -> &Aabb {
        &self.region
    }

    pub fn cells_per_axis(&self) -> usize {
        self.m
    }

    pub fn cell_count(&self) -> usize {
        self.m.pow(3)
    }

    pub fn node_count(&self) -> usize {
        (self.m + 1).pow(3)
    }

    /// Interior nodes per axis.
    pub fn free_per_axis(&self) -> usize {
        self.m - 1
    }

    pub fn free_node_count(&self) -> usize {
        self.free_per_axis().pow(3)
    }

    pub fn dofs(&self) -> usize {
        3 * self.free_node_count()
    }

    pub fn spacing(&self) -> Vector3<f64> {
        self.region.sides() / self.m as f64
    }

    /// Position of grid node `(i, j, k)`, each in `0..=m`.
    pub fn node(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.region.lo() + self.spacing().component_mul(&Vector3::new(i as f64, j as f64, k as f64))
    }

    /// Index of an interior node, `None` on the boundary.
    pub fn free_node(&self, i: usize, j: usize, k: usize) -> Option<usize> {
        let n = self.free_per_axis();
        let inside = |a: usize| a >= 1 && a <= n;
        (inside(i) && inside(j) && inside(k)).then(|| (i - 1) + n * ((j - 1) + n * (k - 1)))
    }

    /// Grid coordinates of free node `idx`.
    pub fn free_node_coords(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.free_per_axis();
        (idx % n + 1, (idx / n) % n + 1, idx / (n * n) + 1)
    }

    /// Nodal interpolant of `f` (boundary values dropped).
    pub fn interpolate<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&Point3<f64>) -> Vector3<f64> + Sync,
    {
        let mut x = vec![0.0; self.dofs()];
        x.par_chunks_mut(3).enumerate().for_each(|(idx, c)| {
            let (i, j, k) = self.free_node_coords(idx);
            let v = f(&self.node(i, j, k));
            c.copy_from_slice(v.as_slice());
        });
        x
    }
}

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Gauss1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Gauss1d {
    pub fn new(order: usize) -> Result<Self, AnalysisError> {
        let (p, w): (Vec<f64>, Vec<f64>) = match order {
            1 => (vec![0.0], vec![2.0]),
            2 => {
                let a = 1.0 / 3f64.sqrt();
                (vec![-a, a], vec![1.0, 1.0])
            }
            3 => {
                let a = 0.6f64.sqrt();
                (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
            4 => {
                let s = (6.0f64 / 5.0).sqrt() * 2.0 / 7.0;
                let (a, b) = ((3.0 / 7.0 - s).sqrt(), (3.0 / 7.0 + s).sqrt());
                let (wa, wb) = ((18.0 + 30f64.sqrt()) / 36.0, (18.0 - 30f64.sqrt()) / 36.0);
                (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
            }
            _ => {
                return Err(AnalysisError::InvalidParameter {
                    name: "quadrature order",
                    reason: format!("{order} not in 1..=4"),
                })
            }
        };
        Ok(Self {
            points: p.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Local corner `a` sits at offset `(a & 1, a >> 1 & 1, a >> 2 & 1)`.
fn corner(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

/// Values and physical gradients of the eight trilinear shape functions at a
/// reference point `t ∈ [0,1]³`.
fn shape(t: &[f64; 3], h: &Vector3<f64>) -> ([f64; 8], [Vector3<f64>; 8]) {
    let mut v = [0.0; 8];
    let mut g = [Vector3::zeros(); 8];
    for a in 0..8 {
        let c = corner(a);
        let f: [f64; 3] = std::array::from_fn(|d| if c[d] == 1 { t[d] } else { 1.0 - t[d] });
        let df: [f64; 3] = std::array::from_fn(|d| if c[d] == 1 { 1.0 } else { -1.0 } / h[d]);
        v[a] = f[0] * f[1] * f[2];
        g[a] = Vector3::new(df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]);
    }
    (v, g)
}

/// The three matrices of the coercivity problem on one mesh:
/// `A` from `∫⟨sym(DuP), sym(DvP)⟩`, `M` from `∫u·v` and `K` from `∫Du:Dv`.
#[derive(Clone, Debug)]
pub struct Forms {
    pub mesh: Mesh,
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub k: CsrMatrix,
}

impl Forms {
    pub fn dofs(&self) -> usize {
        self.mesh.dofs()
    }

    /// `xᵀ(A + λM)x / xᵀKx`.
    pub fn rayleigh_quotient(&self, lambda: f64, x: &[f64]) -> Result<f64, AnalysisError> {
        let den = self.k.quad(x);
        if !(den > 0.0) {
            return Err(AnalysisError::DegenerateWitness);
        }
        Ok((self.a.quad(x) + lambda * self.m.quad(x)) / den)
    }
}

/// Shared sparsity of the three forms: every free node couples to the free
/// nodes of its 3×3×3 neighbourhood, all component pairs.
fn pattern(mesh: &Mesh) -> Pattern {
    let n = mesh.free_per_axis();
    let mut row_ptr = Vec::with_capacity(mesh.dofs() + 1);
    let mut cols = Vec::new();
    row_ptr.push(0);
    for idx in 0..mesh.free_node_count() {
        let (i, j, k) = mesh.free_node_coords(idx);
        let mut neigh = Vec::with_capacity(27);
        for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (a, b, c) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if a >= 1 && b >= 1 && c >= 1 && a <= n as i64 && b <= n as i64 && c <= n as i64 {
                        neigh.push(mesh.free_node(a as usize, b as usize, c as usize).unwrap());
                    }
                }
            }
        }
        for _ in 0..3 {
            for &nb in &neigh {
                for d in 0..3 {
                    cols.push((3 * nb + d) as u32);
                }
            }
            row_ptr.push(cols.len());
        }
    }
    Pattern { row_ptr, cols }
}

/// Assembles `A`, `M` and `K` with a `order`-point tensor Gauss rule; `p` is
/// sampled at every quadrature point.
pub fn assemble_forms<F>(mesh: &Mesh, p: F, order: usize) -> Result<Forms, AnalysisError>
where
    F: Fn(&Point3<f64>) -> Result<Matrix3<f64>, AnalysisError> + Sync,
{
    if mesh.dofs() == 0 {
        return Err(AnalysisError::SingularAssembly { dof: 0 });
    }
    let rule = Gauss1d::new(order)?;
    let nq = rule.len();
    let nq3 = nq * nq * nq;
    let m = mesh.cells_per_axis();
    let h = mesh.spacing();
    let cell_volume = h.x * h.y * h.z;

    // reference data per quadrature point
    let mut qw = Vec::with_capacity(nq3);
    let mut qt = Vec::with_capacity(nq3);
    let mut qv = Vec::with_capacity(nq3);
    let mut qg = Vec::with_capacity(nq3);
    for gz in 0..nq {
        for gy in 0..nq {
            for gx in 0..nq {
                let t = [rule.points[gx], rule.points[gy], rule.points[gz]];
                let (v, g) = shape(&t, &h);
                qw.push(rule.weights[gx] * rule.weights[gy] * rule.weights[gz] * cell_volume);
                qt.push(Vector3::from(t));
                qv.push(v);
                qg.push(g);
            }
        }
    }

    let ps: Vec<Matrix3<f64>> = (0..m * m * m * nq3)
        .into_par_iter()
        .map(|i| {
            let (e, g) = (i / nq3, i % nq3);
            let cell = Vector3::new((e % m) as f64, ((e / m) % m) as f64, (e / (m * m)) as f64);
            p(&(mesh.region().lo() + (cell + qt[g]).component_mul(&h)))
        })
        .collect::<Result<_, _>>()?;

    let pattern = Arc::new(pattern(mesh));
    let n = mesh.free_per_axis();

    // one block of three rows per free node; rows are local to the node so
    // the parallel writes are disjoint
    let blocks: Vec<[Vec<f64>; 3]> = (0..mesh.free_node_count())
        .into_par_iter()
        .map(|idx| {
            let (i, j, k) = mesh.free_node_coords(idx);
            // local accumulators over the 27 neighbour offsets × 3 components
            let mut acc = [[[0.0f64; 81]; 3]; 3];
            for o in 0..8 {
                let oc = corner(o);
                let (ex, ey, ez) = (i + oc[0] - 1, j + oc[1] - 1, k + oc[2] - 1);
                let e = ex + m * (ey + m * ez);
                // this node is corner `a` of element e
                let a = (1 - oc[0]) + 2 * (1 - oc[1]) + 4 * (1 - oc[2]);
                for g in 0..nq3 {
                    let pt = ps[e * nq3 + g].transpose();
                    let w = qw[g];
                    let ga = pt * qg[g][a];
                    for b in 0..8 {
                        let bc = corner(b);
                        let off = (ex + bc[0] + 1 - i) + 3 * (ey + bc[1] + 1 - j) + 9 * (ez + bc[2] + 1 - k);
                        let gb = pt * qg[g][b];
                        let kk = w * qg[g][a].dot(&qg[g][b]);
                        let mm = w * qv[g][a] * qv[g][b];
                        let dot = ga.dot(&gb);
                        for c in 0..3 {
                            acc[1][c][3 * off + c] += mm;
                            acc[2][c][3 * off + c] += kk;
                            for d in 0..3 {
                                let delta = if c == d { dot } else { 0.0 };
                                acc[0][c][3 * off + d] += 0.5 * w * (delta + ga[d] * gb[c]);
                            }
                        }
                    }
                }
            }
            // compress to the free neighbours in pattern order
            let inside = |a: usize| a >= 1 && a <= n;
            let mut out: [Vec<f64>; 3] = Default::default();
            for (f, o) in out.iter_mut().enumerate() {
                for row in &acc[f] {
                    for dk in 0..3 {
                        for dj in 0..3 {
                            for di in 0..3 {
                                if inside(i + di - 1) && inside(j + dj - 1) && inside(k + dk - 1) {
                                    let off = di + 3 * dj + 9 * dk;
                                    o.extend_from_slice(&row[3 * off..3 * off + 3]);
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();

    let nnz = pattern.cols.len();
    let mut vals = [Vec::with_capacity(nnz), Vec::with_capacity(nnz), Vec::with_capacity(nnz)];
    for b in blocks {
        for (v, part) in vals.iter_mut().zip(b) {
            v.extend(part);
        }
    }
    let [a, mass, stiff] = vals.map(|values| CsrMatrix {
        pattern: pattern.clone(),
        values,
    });
    if let Some(dof) = stiff.diagonal().iter().position(|d| !(*d > 0.0)) {
        return Err(AnalysisError::SingularAssembly { dof });
    }
    Ok(Forms {
        mesh: mesh.clone(),
        a,
        m: mass,
        k: stiff,
    })
}

/// Constant coefficient field.
pub fn constant_p(p: Matrix3<f64>) -> impl Fn(&Point3<f64>) -> Result<Matrix3<f64>, AnalysisError> + Sync {
    move |_| Ok(p)
}

/// Exact solver for `K x = b`. The stiffness and mass matrices of the mesh
/// are tensor products of 1D tridiagonal matrices that share the discrete
/// sine basis, so `K` is diagonal in the 3D sine transform.
#[derive(Clone, Debug)]
pub struct StiffnessSolver {
    n: usize,
    /// Orthonormal symmetric sine matrix `√(2/m) sin(jkπ/m)`.
    sines: DMatrix<f64>,
    /// Eigenvalues of the scalar 3D stiffness, in transform order.
    eig: Vec<f64>,
}

impl StiffnessSolver {
    pub fn new(mesh: &Mesh) -> Self {
        let m = mesh.cells_per_axis();
        let n = m - 1;
        let h = mesh.spacing();
        let theta = |k: usize| (k + 1) as f64 * std::f64::consts::PI / m as f64;
        let scale = (2.0 / m as f64).sqrt();
        let sines = DMatrix::from_fn(n, n, |i, j| scale * (theta(i) * (j + 1) as f64).sin());
        let stiff = |d: usize, k: usize| 2.0 / h[d] * (1.0 - theta(k).cos());
        let mass = |d: usize, k: usize| h[d] / 3.0 * (2.0 + theta(k).cos());
        let mut eig = Vec::with_capacity(n * n * n);
        for r in 0..n {
            for q in 0..n {
                for p in 0..n {
                    eig.push(
                        stiff(0, p) * mass(1, q) * mass(2, r)
                            + mass(0, p) * stiff(1, q) * mass(2, r)
                            + mass(0, p) * mass(1, q) * stiff(2, r),
                    );
                }
            }
        }
        Self { n, sines, eig }
    }

    /// 3D sine transform of `count` scalar grids stored one after another,
    /// `i` fastest. Each axis is one matrix product.
    fn sine3(&self, data: Vec<f64>, count: usize) -> Vec<f64> {
        let n = self.n;
        let s = &self.sines;
        // along i: S · (n × count·n²)
        let mut t = s * DMatrix::from_vec(n, count * n * n, data);
        // along j: every (i, j) plane times S
        for p in 0..count * n {
            let plane = t.columns(p * n, n) * s;
            t.columns_mut(p * n, n).copy_from(&plane);
        }
        // along k: every grid as (n² × n) times S
        let mut buf: Vec<f64> = t.data.into();
        for c in 0..count {
            let grid = &mut buf[c * n * n * n..(c + 1) * n * n * n];
            let prod = DMatrix::from_column_slice(n * n, n, grid) * s;
            grid.copy_from_slice(prod.as_slice());
        }
        buf
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_block(&DMatrix::from_column_slice(b.len(), 1, b)).data.into()
    }

    /// `K⁻¹ B` column by column.
    pub fn solve_block(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n3 = self.eig.len();
        let cols = b.ncols();
        // interleaved dofs to component-major grids
        let mut grids = vec![0.0; 3 * n3 * cols];
        for c in 0..cols {
            let col = b.column(c);
            for (i, v) in col.iter().enumerate() {
                grids[(3 * c + i % 3) * n3 + i / 3] = *v;
            }
        }
        let mut t = self.sine3(grids, 3 * cols);
        t.chunks_mut(n3).for_each(|g| g.iter_mut().zip(&self.eig).for_each(|(v, e)| *v /= e));
        let t = self.sine3(t, 3 * cols);
        DMatrix::from_fn(b.nrows(), cols, |i, c| t[(3 * c + i % 3) * n3 + i / 3])
    }

    /// Smallest eigenvalue of the scalar stiffness.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_forms(m: usize) -> Forms {
        let mesh = Mesh::new(Aabb::unit(), m).unwrap();
        assemble_forms(&mesh, constant_p(Matrix3::identity()), 2).unwrap()
    }

    #[test]
    fn counts() {
        let mesh = Mesh::new(Aabb::unit(), 4).unwrap();
        assert_eq!(mesh.node_count(), 125);
        assert_eq!(mesh.free_node_count(), 27);
        assert_eq!(mesh.dofs(), 81);
        assert_eq!(mesh.free_node(0, 1, 1), None);
        assert_eq!(mesh.free_node(3, 3, 3), Some(26));
        assert_eq!(mesh.free_node_coords(26), (3, 3, 3));
    }

    #[test]
    fn single_cell_mesh_is_singular() {
        let mesh = Mesh::new(Aabb::unit(), 1).unwrap();
        let err = assemble_forms(&mesh, constant_p(Matrix3::identity()), 2).unwrap_err();
        assert!(matches!(err, AnalysisError::SingularAssembly { dof: 0 }));
    }

    #[test]
    fn positivity_on_two_cells() {
        let f = identity_forms(2);
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..f.dofs()).map(|_| r.random_range(-1.0..1.0)).collect();
            assert!(f.a.quad(&x) >= 0.0);
            assert!(f.k.quad(&x) > 0.0);
        }
    }

    #[test]
    fn forms_are_symmetric() {
        let mesh = Mesh::new(Aabb::cube(Point3::origin(), 0.5), 5).unwrap();
        let rot = *crate::geometry::Rotation3::random(&mut ChaCha8Rng::seed_from_u64(2)).matrix();
        let f = assemble_forms(&mesh, constant_p(rot * 1.7), 2).unwrap();
        for mat in [&f.a, &f.m, &f.k] {
            assert!(mat.asymmetry() < 1e-13 * mat.diagonal().iter().fold(0.0f64, |a, b| a.max(*b)));
        }
    }

    #[test]
    fn mass_and_stiffness_of_polynomials() {
        // u = (b, 0, 0) with b = x(1-x)y(1-y)z(1-z), interpolated on a mesh: the
        // interpolant's norms differ from the continuum ones, so compare
        // against the exact stencil sums instead: M·1 integrates the hat
        // functions, ∫φᵢ = h³ for every interior node
        let f = identity_forms(4);
        let ones = vec![1.0; f.dofs()];
        let mass_rows = f.m.mul(&ones);
        let h3 = 0.25f64.powi(3);
        let (i, j, k) = (2, 2, 2);
        let idx = f.mesh.free_node(i, j, k).unwrap();
        assert!((mass_rows[3 * idx] - h3).abs() < 1e-15);
        // K annihilates constants away from the boundary
        assert!(f.k.mul(&ones)[3 * idx].abs() < 1e-14);
    }

    #[test]
    fn stiffness_solver_inverts_k() {
        let mesh = Mesh::new(Aabb::new(Point3::origin(), Point3::new(1.0, 0.5, 0.75)).unwrap(), 6).unwrap();
        let f = assemble_forms(&mesh, constant_p(Matrix3::identity()), 2).unwrap();
        let solver = StiffnessSolver::new(&mesh);
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..f.dofs()).map(|_| r.random_range(-1.0..1.0)).collect();
        let x = solver.solve(&b);
        let kx = f.k.mul(&x);
        let err = kx.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(dot(&x, &b) > 0.0);
    }

    #[test]
    fn identity_form_splits_into_gradient_and_divergence() {
        // for P = I: |sym Du|² = ½|Du|² + ½ tr(Du Du) pointwise, and on
        // trilinear fields with zero boundary values ∫tr(Du Du) = ∫(div u)²;
        // the divergence form is assembled independently from nodal values
        let mesh = Mesh::new(Aabb::unit(), 5).unwrap();
        let f = assemble_forms(&mesh, constant_p(Matrix3::identity()), 2).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..f.dofs()).map(|_| r.random_range(-1.0..1.0)).collect();
        let div2 = divergence_energy(&mesh, &x);
        let lhs = f.a.quad(&x);
        let rhs = 0.5 * f.k.quad(&x) + 0.5 * div2;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} {rhs}");
    }

    /// `∫(div u)²` of the trilinear interpolant of nodal values, by 3-point
    /// Gauss on each cell (exact for this degree).
    fn divergence_energy(mesh: &Mesh, x: &[f64]) -> f64 {
        let m = mesh.cells_per_axis();
        let h = mesh.spacing();
        let rule = Gauss1d::new(3).unwrap();
        let value = |i: usize, j: usize, k: usize, c: usize| mesh.free_node(i, j, k).map_or(0.0, |n| x[3 * n + c]);
        let mut total = 0.0;
        for ez in 0..m {
            for ey in 0..m {
                for ex in 0..m {
                    for (gz, wz) in rule.points.iter().zip(&rule.weights) {
                        for (gy, wy) in rule.points.iter().zip(&rule.weights) {
                            for (gx, wx) in rule.points.iter().zip(&rule.weights) {
                                let (_, g) = shape(&[*gx, *gy, *gz], &h);
                                let mut div = 0.0;
                                for (a, ga) in g.iter().enumerate() {
                                    let c = corner(a);
                                    for d in 0..3 {
                                        div += ga[d] * value(ex + c[0], ey + c[1], ez + c[2], d);
                                    }
                                }
                                total += wx * wy * wz * h.x * h.y * h.z * div * div;
                            }
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn continuum_divergence_identity_on_polynomials() {
        // ∫|sym Du|² = ½∫|Du|² + ½∫(div u)² for u vanishing on ∂Q, evaluated
        // with a 4-point rule that is exact for these degrees
        let rule = Gauss1d::new(4).unwrap();
        let bubble = |p: &Vector3<f64>| p.x * (1.0 - p.x) * p.y * (1.0 - p.y) * p.z * (1.0 - p.z);
        let grad_bubble = |p: &Vector3<f64>| {
            let f = |t: f64| t * (1.0 - t);
            let df = |t: f64| 1.0 - 2.0 * t;
            Vector3::new(df(p.x) * f(p.y) * f(p.z), f(p.x) * df(p.y) * f(p.z), f(p.x) * f(p.y) * df(p.z))
        };
        // u = b(x)·(1 + x, 2y − z, xz)
        let g = |p: &Vector3<f64>| Vector3::new(1.0 + p.x, 2.0 * p.y - p.z, p.x * p.z);
        let dg = |p: &Vector3<f64>| Matrix3::new(1.0, 0.0, 0.0, 0.0, 2.0, -1.0, p.z, 0.0, p.x);
        let (mut s, mut d2, mut dv) = (0.0, 0.0, 0.0);
        for (x, wx) in rule.points.iter().zip(&rule.weights) {
            for (y, wy) in rule.points.iter().zip(&rule.weights) {
                for (z, wz) in rule.points.iter().zip(&rule.weights) {
                    let p = Vector3::new(*x, *y, *z);
                    let du = g(&p) * grad_bubble(&p).transpose() + dg(&p) * bubble(&p);
                    let w = wx * wy * wz;
                    s += w * ((du + du.transpose()) * 0.5).norm_squared();
                    d2 += w * du.norm_squared();
                    dv += w * du.trace().powi(2);
                }
            }
        }
        assert!((s - 0.5 * d2 - 0.5 * dv).abs() <= 1e-12 * s);
    }
}

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Row pointers and column indices shared by matrices with one pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
}

/// Square sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub pattern: Arc<Pattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.pattern.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        (&self.pattern.cols[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&(j as u32)).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j as usize]).sum();
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_into(x, &mut y);
        y
    }

    /// `A X` for a block of column vectors; the matrix is streamed once for
    /// all columns.
    pub fn mul_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let k = x.ncols();
        let xt = x.transpose();
        let mut yt = DMatrix::zeros(k, self.dim());
        yt.as_mut_slice().par_chunks_mut(k).enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                let xj = &xt.as_slice()[j as usize * k..(j as usize + 1) * k];
                yi.iter_mut().zip(xj).for_each(|(y, x)| *y += v * x);
            }
        });
        yt.transpose()
    }

    /// `xᵀ A x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul(x))
    }

    /// `α·self + β·other` for a matrix with the same pattern.
    pub fn combine(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern);
        CsrMatrix {
            pattern: self.pattern.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }

    /// Largest `|Aᵢⱼ − Aⱼᵢ|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .map(|(&j, v)| (v - self.get(j as usize, i)).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Matrix Market coordinate format (1-based, general).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), self.nnz())?;
        for i in 0..self.dim() {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 1 << 14 {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    // fixed block partition so the sum does not depend on the thread count
    a.par_chunks(1 << 12)
        .zip(b.par_chunks(1 << 12))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `y += α x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CsrMatrix {
        // [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]
        CsrMatrix {
            pattern: Arc::new(Pattern {
                row_ptr: vec![0, 2, 5, 7],
                cols: vec![0, 1, 0, 1, 2, 1, 2],
            }),
            values: vec![2.0, -1.0, -1.0, 2.0, -1.0, -1.0, 2.0],
        }
    }

    #[test]
    fn matvec_and_access() {
        let a = small();
        assert_eq!(a.mul(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.diagonal(), vec![2.0; 3]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.quad(&[1.0, 0.0, 0.0]), 2.0);
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 2.0, 3.0]);
        let y = a.mul_block(&x);
        assert_eq!(y.column(0).as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(y.column(1).iter().copied().collect::<Vec<_>>(), a.mul(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn matrix_market_export() {
        let mut out = Vec::new();
        small().write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        assert_eq!(lines.next().unwrap(), "3 3 7");
        assert_eq!(lines.next().unwrap(), "1 1 2e0");
    }
}

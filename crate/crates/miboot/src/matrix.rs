//! Small dense matrices and the symmetric-matrix kernels used by the
//! imputation and estimation code: the sweep operator, Cholesky
//! factorization, and SPD solves.
//!
//! Dimensions here are tiny (tens of columns), so everything is a plain
//! row-major `Vec<f64>` with straightforward loops.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{ln, sqrt};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// C = A B
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let crow = out.row_mut(i);
                for (c, &b) in crow.iter_mut().zip(orow) {
                    *c += a * b;
                }
            }
        }
        out
    }

    /// Maximum absolute difference against another matrix.
    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m: f64 = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = (a - b).abs();
            if d > m {
                m = d;
            }
        }
        m
    }
}

/// Numerical failure in a matrix kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixError {
    /// A sweep pivot was (numerically) zero.
    ZeroPivot { index: usize },
    /// Cholesky hit a non-positive leading minor.
    NotPositiveDefinite { index: usize },
}

impl core::fmt::Display for MatrixError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MatrixError::ZeroPivot { index } => write!(f, "zero pivot at index {index}"),
            MatrixError::NotPositiveDefinite { index } => {
                write!(f, "matrix not positive definite at column {index}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MatrixError {}

/// Relative pivot threshold below which a sweep is treated as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Sweep the symmetric matrix `g` in place on `pivot`.
///
/// With `h = sweep(g, k)`:
/// `h[k][k] = -1/g[k][k]`, `h[i][k] = h[k][i] = g[i][k]/g[k][k]`, and
/// `h[i][j] = g[i][j] - g[i][k] g[k][j]/g[k][k]`. Sweeping an augmented
/// moment matrix on a set of coordinates exposes the regression of the
/// unswept coordinates on the swept ones together with the residual
/// covariance.
pub fn sweep(g: &mut Mat, pivot: usize) -> Result<(), MatrixError> {
    sweep_signed(g, pivot, false)
}

/// Reverse sweep: the inverse operation of [`sweep`] on the same pivot.
pub fn reverse_sweep(g: &mut Mat, pivot: usize) -> Result<(), MatrixError> {
    sweep_signed(g, pivot, true)
}

fn sweep_signed(g: &mut Mat, pivot: usize, reverse: bool) -> Result<(), MatrixError> {
    assert_eq!(g.rows, g.cols, "sweep requires a square matrix");
    let n = g.rows;
    assert!(pivot < n, "pivot out of range");
    let d = g.get(pivot, pivot);
    // scale-aware singularity guard
    let mut scale: f64 = 0.0;
    for i in 0..n {
        scale = scale.max(g.get(i, i).abs());
    }
    if d.abs() <= PIVOT_TOL * scale.max(1e-300) {
        return Err(MatrixError::ZeroPivot { index: pivot });
    }
    let inv = 1.0 / d;
    let sign = if reverse { -1.0 } else { 1.0 };

    // copy of the pivot row before modification
    let prow: Vec<f64> = g.row(pivot).to_vec();
    for i in 0..n {
        if i == pivot {
            continue;
        }
        let gik = g.get(i, pivot);
        if gik != 0.0 {
            let f = gik * inv;
            let row = g.row_mut(i);
            for (j, &p) in prow.iter().enumerate() {
                if j != pivot {
                    row[j] -= f * p;
                }
            }
        }
    }
    for j in 0..n {
        if j != pivot {
            let v = sign * prow[j] * inv;
            g.set(pivot, j, v);
            g.set(j, pivot, v);
        }
    }
    g.set(pivot, pivot, -inv);
    Ok(())
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub fn cholesky(a: &Mat) -> Result<Mat, MatrixError> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            let v = l.get(j, k);
            d -= v * v;
        }
        if d <= 0.0 {
            return Err(MatrixError::NotPositiveDefinite { index: j });
        }
        let dj = sqrt(d);
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / dj);
        }
    }
    Ok(l)
}

/// Solve A x = b for SPD `A` via Cholesky.
pub fn solve_spd(a: &Mat, b: &[f64]) -> Result<Vec<f64>, MatrixError> {
    let l = cholesky(a)?;
    Ok(solve_with_cholesky(&l, b))
}

/// Solve using a precomputed lower Cholesky factor.
pub fn solve_with_cholesky(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Inverse of an SPD matrix via Cholesky.
pub fn inverse_spd(a: &Mat) -> Result<Mat, MatrixError> {
    let n = a.rows;
    let l = cholesky(a)?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = solve_with_cholesky(&l, &e);
        for i in 0..n {
            inv.set(i, j, col[i]);
        }
    }
    // symmetrize against round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.set(i, j, v);
            inv.set(j, i, v);
        }
    }
    Ok(inv)
}

/// Log-determinant of an SPD matrix.
pub fn log_det_spd(a: &Mat) -> Result<f64, MatrixError> {
    let l = cholesky(a)?;
    let mut acc = 0.0;
    for i in 0..a.rows {
        acc += ln(l.get(i, i));
    }
    Ok(2.0 * acc)
}

//! Small dense linear algebra: Cholesky factorization, triangular solves and
//! ordinary least squares. Sizes here are tiny (≤ a dozen columns), so plain
//! row-major `Vec<f64>` storage is enough.

use crate::math::sqrt;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer size");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular `L` with `L·Lᵀ = a`, or `None` if `a` is not positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    if n != a.cols() {
        return None;
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = sqrt(d);
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `l·y = b` for lower-triangular `l` in place.
pub fn solve_lower_in_place(l: &Matrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Fitted `y ≈ intercept + Σ coefs[j]·x[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefs: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Ordinary least squares with an intercept.
///
/// `columns[j][i]` is predictor `j` at observation `i`. Predictors are centered
/// and orthogonalized by modified Gram-Schmidt with one re-orthogonalization
/// pass; a predictor whose residual norm falls below `1e-10` of its own norm is
/// linearly dependent on earlier ones and gets coefficient zero. Constant
/// predictors therefore drop out and the intercept absorbs them.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> LinearFit {
    let p = columns.len();
    let y_mean = crate::math::mean(y);
    let means: Vec<f64> = columns.iter().map(|c| crate::math::mean(c)).collect();

    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut kept: Vec<usize> = Vec::with_capacity(p);
    // r[a][b]: coefficient of q_a in kept column b (upper triangular in kept order).
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(p);

    for (j, col) in columns.iter().enumerate() {
        let mut v: Vec<f64> = col.iter().map(|x| x - means[j]).collect();
        let norm0 = sqrt(v.iter().map(|x| x * x).sum());
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        let mut rcol = vec![0.0; q.len() + 1];
        for _ in 0..2 {
            for (a, qa) in q.iter().enumerate() {
                let c: f64 = qa.iter().zip(&v).map(|(x, y)| x * y).sum();
                rcol[a] += c;
                for (vi, qi) in v.iter_mut().zip(qa) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = sqrt(v.iter().map(|x| x * x).sum());
        if norm <= 1e-10 * norm0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        let last = rcol.len() - 1;
        rcol[last] = norm;
        q.push(v);
        r.push(rcol);
        kept.push(j);
    }

    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut qty = vec![0.0; q.len()];
    for (a, qa) in q.iter().enumerate() {
        let c: f64 = qa.iter().zip(&resid).map(|(x, y)| x * y).sum();
        qty[a] = c;
        for (ri, qi) in resid.iter_mut().zip(qa) {
            *ri -= c * qi;
        }
    }

    // Back substitution on R (column-stored: r[b][a] is row a of column b).
    let m = q.len();
    let mut b = vec![0.0; m];
    for a in (0..m).rev() {
        let mut s = qty[a];
        for c in a + 1..m {
            s -= r[c][a] * b[c];
        }
        b[a] = s / r[a][a];
    }

    let mut coefs = vec![0.0; p];
    for (slot, &j) in kept.iter().enumerate() {
        coefs[j] = b[slot];
    }
    let intercept = y_mean - coefs.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    LinearFit { intercept, coefs }
}

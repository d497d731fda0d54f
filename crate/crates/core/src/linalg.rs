//! Small dense linear algebra: Cholesky with iterative refinement and a
//! column-pivoted QR least-squares fallback.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] += value;
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // Row-major lower triangle, full storage.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes a symmetric positive-definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: &Matrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "Cholesky needs a square matrix");
        let n = a.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (head, tail) = l.split_at_mut(i * n);
                let row_i = &tail[..n];
                let s = if j < i {
                    dot(&row_i[..j], &head[j * n..j * n + j])
                } else {
                    dot(&row_i[..j], &row_i[..j])
                };
                let value = a.get(i, j) - s;
                if j == i {
                    if !(value > 0.0) || !value.is_finite() {
                        return Err(Error::Factorization {
                            condition: diagonal_condition(a),
                        });
                    }
                    tail[i] = math::sqrt(value);
                } else {
                    tail[j] = value / head[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L^{-1} b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / self.l[i * n + i];
        }
        y
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = self.solve_lower(b);
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n)
                .zip(&y[i + 1..])
                .map(|(k, yk)| self.l[k * n + i] * yk)
                .sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Squared ratio of the extreme diagonal entries of `L`; a cheap lower
    /// bound on the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.n).map(|i| self.l[i * self.n + i]);
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
        let r = hi / lo;
        r * r
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| math::ln(self.l[i * self.n + i]))
            .sum::<f64>()
    }
}

fn diagonal_condition(a: &Matrix) -> f64 {
    let diag = (0..a.rows).map(|i| a.get(i, i).abs());
    let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d), hi.max(d))
    });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `A x = b` for symmetric positive-definite `A`, followed by
/// `refinements` steps of iterative refinement.
pub fn solve_spd(a: &Matrix, b: &[f64], refinements: usize) -> Result<(Vec<f64>, Cholesky)> {
    let chol = Cholesky::new(a)?;
    let mut x = chol.solve(b);
    for _ in 0..refinements {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = chol.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    Ok((x, chol))
}

/// Minimum-residual solution of `A x ~ b` by Householder QR with column
/// pivoting. Columns beyond the numerical rank get zero coefficients.
///
/// Returns the solution and the detected rank.
pub fn lstsq_pivoted(a: &Matrix, b: &[f64]) -> (Vec<f64>, usize) {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m);
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j)).collect())
        .collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let steps = m.min(n);
    let mut rank = 0;
    let mut first_diag = 0.0f64;
    for k in 0..steps {
        let pivot = (k..n)
            .max_by(|&i, &j| {
                norms[i]
                    .partial_cmp(&norms[j])
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        cols.swap(k, pivot);
        norms.swap(k, pivot);
        perm.swap(k, pivot);
        let col = &cols[k];
        let alpha = math::sqrt(dot(&col[k..], &col[k..]));
        if k == 0 {
            first_diag = alpha;
        }
        if alpha <= 1e-13 * first_diag || alpha == 0.0 {
            break;
        }
        rank += 1;
        let sign = if col[k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = col[k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        let apply = |x: &mut [f64]| {
            let s = 2.0 * dot(&v, x) / vnorm2;
            for (xi, vi) in x.iter_mut().zip(&v) {
                *xi -= s * vi;
            }
        };
        for c in cols.iter_mut().skip(k) {
            apply(&mut c[k..]);
        }
        apply(&mut rhs[k..]);
        for j in k + 1..n {
            norms[j] = dot(&cols[j][k + 1..], &cols[j][k + 1..]);
        }
    }
    // Back substitution on the leading rank x rank block.
    let mut z = vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= cols[j][i] * z[j];
        }
        z[i] = s / cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = z[k];
    }
    (x, rank)
}

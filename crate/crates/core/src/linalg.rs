//! Small dense linear algebra: a row-major matrix, a one-sided Jacobi SVD
//! and the minimum-norm least-squares solve built on it.
//!
//! The systems handled here are tiny (tens of rows, a handful of columns),
//! so accuracy matters more than speed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math;

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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_dim("matrix data", rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            Error::check_dim("matrix row", c, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
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

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim("vector", self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        Error::check_dim("matrix product", self.cols, other.rows)?;
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
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled to avoid overflow.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, &x| math::hypot(acc, x))
}

/// Thin singular value decomposition `A = U diag(σ) Vᵀ` with `U` of shape
/// m×n and `V` of shape n×n. Singular values are sorted nonincreasing;
/// columns of `U` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::Numeric("SVD input contains non-finite entries".into()));
    }
    let (m, n) = (a.rows, a.cols);
    // Work column-major: w[j] is column j of the rotated matrix.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let tol = f64::EPSILON * m.max(1) as f64;
    // columns below this squared norm are numerically zero; rotating them
    // against each other only shuffles rounding noise
    let fro = a.frobenius_norm();
    let negligible = (f64::EPSILON * fro) * (f64::EPSILON * fro);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || math::abs(gamma) <= tol * math::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (math::abs(zeta) + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("Jacobi SVD did not converge".into()));
    }

    let mut sigma: Vec<f64> = w.iter().map(|col| norm2(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        if s > 0.0 {
            for i in 0..m {
                u[(i, k)] = w[j][i] / s;
            }
        }
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    sigma = order.iter().map(|&j| sigma[j]).collect();
    Ok(Svd {
        u,
        singular_values: sigma,
        v: vm,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Default relative rank tolerance: machine epsilon times `max(m, n)`.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    f64::EPSILON * rows.max(cols) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresSolution {
    pub x: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub effective_rank: usize,
    pub residual_norm: f64,
}

impl LeastSquaresSolution {
    /// σ_max / σ_min over all columns; infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => f64::NAN,
        }
    }
}

/// Minimum-norm least-squares solution `x = A⁺ b`.
///
/// Singular values `σᵢ ≤ rank_tol · σ₁` are treated as zero. The result is
/// the smallest-norm element among all minimizers of `‖Ax − b‖₂`.
pub fn min_norm_least_squares(a: &Matrix, b: &[f64], rank_tol: f64) -> Result<LeastSquaresSolution> {
    Error::check_dim("right-hand side", a.rows, b.len())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("right-hand side contains non-finite entries".into()));
    }
    let dec = svd(a)?;
    let sigma = &dec.singular_values;
    let cutoff = sigma.first().copied().unwrap_or(0.0) * rank_tol;
    let mut x = vec![0.0; a.cols];
    let mut rank = 0;
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        rank += 1;
        let ub: f64 = (0..a.rows).map(|i| dec.u[(i, k)] * b[i]).sum();
        let coef = ub / s;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coef * dec.v[(j, k)];
        }
    }
    let ax = a.mul_vec(&x)?;
    let resid: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    Ok(LeastSquaresSolution {
        x,
        singular_values: dec.singular_values,
        effective_rank: rank,
        residual_norm: norm2(&resid),
    })
}

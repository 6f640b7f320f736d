// SPDX-License-Identifier: Apache-2.0

//! Dense matrix kernel.
//!
//! Only what the propagation and diffusion solvers (and their Kronecker
//! oracles) need: products, transpose, Kronecker product, column-stacking
//! vectorization, an LU linear solve and Frobenius norms. Storage is
//! row-major; every contract is index based.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest row or column count `kron` will produce by default (32² lifted
/// systems, i.e. n ≤ 32 for the affinity oracle).
pub const DEFAULT_KRON_CAP: usize = 1024;

/// Relative pivot threshold below which `solve_dense` declares the system singular.
const PIVOT_RATIO_TOL: f64 = 1e-14;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
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
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let m = Matrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (i, cols),
                    right: (i, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn column(values: &[f64]) -> Result<Self> {
        Matrix::from_vec(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => Err(Error::NonFinite {
                row: p / self.cols.max(1),
                col: p % self.cols.max(1),
            }),
        }
    }

    fn ensure_same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(0, 0);
        self.transpose_into(&mut t);
        t
    }

    /// `self · other`. Zero entries of `self` are skipped, so a sparse left
    /// operand (a kNN graph) costs `nnz · other.cols` rather than a full cube.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(0, 0);
        self.matmul_into(other, &mut out)?;
        out.check_finite()?;
        Ok(out)
    }

    /// [`Matrix::matmul`] into a reusable buffer. Skips the finiteness check.
    pub fn matmul_into(&self, other: &Matrix, out: &mut Matrix) -> Result<()> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        out.reset(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * oc..(k + 1) * oc];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(())
    }

    /// Resizes to `rows × cols` and zero-fills, keeping the allocation.
    fn reset(&mut self, rows: usize, cols: usize) {
        self.rows = rows;
        self.cols = cols;
        self.data.clear();
        self.data.resize(rows * cols, 0.0);
    }

    pub fn transpose_into(&self, out: &mut Matrix) {
        out.reset(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
    }

    pub fn scale(&self, factor: f64) -> Result<Matrix> {
        let out = Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        };
        out.check_finite()?;
        Ok(out)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        self.ensure_same_shape(other, op)?;
        let out = Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        };
        out.check_finite()?;
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self + factor · other`.
    pub fn add_scaled(&self, factor: f64, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add_scaled", |a, b| a + factor * b)
    }

    /// Elementwise maximum.
    pub fn max_elementwise(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "max_elementwise", f64::max)
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
    }

    pub fn scale_assign(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..i).all(|j| self.data[i * self.cols + j] == self.data[j * self.cols + i])
            })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }
}

impl Default for Matrix {
    fn default() -> Self {
        Matrix::zeros(0, 0)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of bounds"
        );
        &mut self.data[r * self.cols + c]
    }
}

/// `s · x · sᵀ`, evaluated as two left-sparse products.
pub fn sandwich(s: &Matrix, x: &Matrix) -> Result<Matrix> {
    let u = s.matmul(x)?;
    Ok(s.matmul(&u.transpose())?.transpose())
}

/// Kronecker product with the default size cap.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    kron_with_cap(a, b, DEFAULT_KRON_CAP)
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron_with_cap(a: &Matrix, b: &Matrix, cap: usize) -> Result<Matrix> {
    let rows = a.rows.saturating_mul(b.rows);
    let cols = a.cols.saturating_mul(b.cols);
    let largest = rows.max(cols);
    if largest > cap {
        return Err(Error::OracleCapacity {
            requested: largest,
            cap,
        });
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for p in 0..b.rows {
                let dst = (i * b.rows + p) * cols + j * b.cols;
                for (o, &bv) in out.data[dst..dst + b.cols].iter_mut().zip(b.row(p)) {
                    *o = aij * bv;
                }
            }
        }
    }
    out.check_finite()?;
    Ok(out)
}

/// Stacks the columns of `a` into an `rows·cols × 1` column.
pub fn vec(a: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(a.rows * a.cols);
    for c in 0..a.cols {
        for r in 0..a.rows {
            data.push(a[(r, c)]);
        }
    }
    Matrix {
        rows: a.rows * a.cols,
        cols: 1,
        data,
    }
}

/// Inverse of [`vec`]: refills an `rows × cols` matrix column by column.
pub fn vec_inverse(v: &Matrix, rows: usize, cols: usize) -> Result<Matrix> {
    if v.cols != 1 || v.rows != rows * cols {
        return Err(Error::DimensionMismatch {
            op: "vec_inverse",
            left: v.shape(),
            right: (rows * cols, 1),
        });
    }
    let mut out = Matrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            out[(r, c)] = v.data[c * rows + r];
        }
    }
    Ok(out)
}

pub fn frobenius_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(b, "frobenius_distance")?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Solves `a · x = b` by LU with partial pivoting.
///
/// Fails with [`Error::Singular`] when a pivot falls below `1e-14` of the
/// largest entry of `a`, or when the computed solution misses the residual
/// bound `‖a·x − b‖_F ≤ 1e-8·(1 + ‖b‖_F)`.
pub fn solve_dense(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    if !a.is_square() || b.rows != n {
        return Err(Error::DimensionMismatch {
            op: "solve_dense",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let k = b.cols;
    let scale = a.max_abs();
    if n > 0 && scale == 0.0 {
        return Err(Error::Singular {
            column: 0,
            pivot: 0.0,
            ratio: 0.0,
        });
    }

    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    for col in 0..n {
        let (piv_row, piv_abs) =
            (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        let ratio = piv_abs / scale;
        if ratio < PIVOT_RATIO_TOL {
            return Err(Error::Singular {
                column: col,
                pivot: piv_abs,
                ratio,
            });
        }
        if piv_row != col {
            for c in 0..n {
                lu.swap(col * n + c, piv_row * n + c);
            }
            for c in 0..k {
                x.swap(col * k + c, piv_row * k + c);
            }
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = factor;
            for c in col + 1..n {
                lu[r * n + c] -= factor * lu[col * n + c];
            }
            for c in 0..k {
                x[r * k + c] -= factor * x[col * k + c];
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[col * n + col];
        for c in 0..k {
            let mut acc = x[col * k + c];
            for j in col + 1..n {
                acc -= lu[col * n + j] * x[j * k + c];
            }
            x[col * k + c] = acc / pivot;
        }
    }

    let x = Matrix::from_vec(n, k, x)?;
    let residual = frobenius_distance(&a.matmul(&x)?, b)?;
    let bound = 1e-8 * (1.0 + b.frobenius_norm());
    if residual > bound {
        return Err(Error::Singular {
            column: n,
            pivot: residual,
            ratio: residual / bound,
        });
    }
    Ok(x)
}

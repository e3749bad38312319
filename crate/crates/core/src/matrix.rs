//! Dense symmetric matrices, eigendecompositions, norms and the Frobenius
//! projection onto the positive semidefinite cone.
//!
//! Storage is a full dense `faer::Mat<f64>`; every constructor symmetrizes its
//! input so that downstream code can rely on `S[(i, j)] == S[(j, i)]` bitwise.

use std::ops::{Add, Mul, Neg, Sub};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: Mat<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { data: Mat::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        Self {
            data: Mat::from_fn(dim, dim, |i, j| if i == j { c } else { 0.0 }),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            data: Mat::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }),
        }
    }

    /// Builds a matrix from the lower triangle of `f`; the upper triangle is mirrored.
    pub fn from_lower_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Mat::zeros(dim, dim);
        for j in 0..dim {
            for i in j..dim {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    /// Wraps a square matrix after explicit symmetrization `(S + Sᵀ) / 2`.
    pub fn from_mat(m: Mat<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Input(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Input("matrix dimension must be at least 1".into()));
        }
        Ok(Self::symmetrized(m.as_ref()))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Input("matrix dimension must be at least 1".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Input(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        Self::from_mat(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Like [`from_rows`](Self::from_rows) but rejects inputs whose asymmetry exceeds `tol`.
    pub fn from_rows_checked(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        for i in 0..n {
            for j in 0..i {
                if let (Some(a), Some(b)) = (rows[i].get(j), rows.get(j).and_then(|r| r.get(i))) {
                    if (a - b).abs() > tol {
                        return Err(Error::Input(format!(
                            "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                        )));
                    }
                }
            }
        }
        Self::from_rows(rows)
    }

    fn symmetrized(m: MatRef<'_, f64>) -> Self {
        let n = m.nrows();
        let mut data = Mat::zeros(n, n);
        for j in 0..n {
            data[(j, j)] = m[(j, j)];
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `tr(S T)`.
    pub fn dot(&self, other: &SymmetricMatrix) -> f64 {
        self.assert_same_dim(other);
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += self.data[(i, j)] * other.data[(i, j)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.entries().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Sum of absolute entries over the full matrix.
    pub fn l1_entrywise(&self) -> f64 {
        self.entries().map(f64::abs).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |j| (0..n).map(move |i| self.data[(i, j)]))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(f64::is_finite)
    }

    /// Applies `f(i, j, value)` to the lower triangle and mirrors the result.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        Self::from_lower_fn(self.dim(), |i, j| f(i, j, self.get(i, j)))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        self.map_indexed(|_, _, v| f(v))
    }

    pub fn zip_map(&self, other: &SymmetricMatrix, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        self.assert_same_dim(other);
        Self::from_lower_fn(self.dim(), |i, j| f(self.get(i, j), other.get(i, j)))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &SymmetricMatrix) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_lower_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Product `S v` for a dense vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length mismatch");
        let mut out = vec![0.0; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            let col = self.data.col(j);
            for i in 0..n {
                out[i] += col[i] * vj;
            }
        }
        out
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        eigendecompose(self)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_finite()?;
        let mut vals = self
            .data
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?;
        vals.reverse();
        Ok(vals)
    }

    /// Cholesky-based log-determinant; `None` unless the matrix is positive definite.
    pub fn log_det(&self) -> Option<f64> {
        if !self.is_finite() {
            return None;
        }
        let llt = self.data.llt(Side::Lower).ok()?;
        let l = llt.L();
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = l[(i, i)];
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            acc += d.ln();
        }
        Some(2.0 * acc)
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self) -> Result<Self> {
        self.check_finite()?;
        let llt = self
            .data
            .llt(Side::Lower)
            .map_err(|_| Error::Numerical("matrix is not positive definite".into()))?;
        let inv = llt.inverse();
        let out = Self::symmetrized(inv.as_ref());
        if !out.is_finite() {
            return Err(Error::Numerical("inverse has non-finite entries".into()));
        }
        Ok(out)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Input("matrix has non-finite entries".into()))
        }
    }

    fn assert_same_dim(&self, other: &SymmetricMatrix) {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
    }
}

impl Add for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn add(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn sub(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn mul(self, c: f64) -> SymmetricMatrix {
        self.map(|v| c * v)
    }
}

impl Neg for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn neg(self) -> SymmetricMatrix {
        self.map(|v| -v)
    }
}

/// `S = U diag(M) Uᵀ` with eigenvalues `M` in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    vectors: Mat<f64>,
    values: Vec<f64>,
}

impl EigenDecomposition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("nonempty decomposition")
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    /// Eigenvector `k` as an owned vector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.vectors[(i, k)]).collect()
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.map_values(|v| v)
    }

    /// Spectral function `U f(M) Uᵀ`.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> SymmetricMatrix {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.with_values(&mapped)
    }

    /// `U diag(values) Uᵀ` for caller-supplied eigenvalues.
    pub fn with_values(&self, values: &[f64]) -> SymmetricMatrix {
        let n = self.dim();
        assert_eq!(values.len(), n);
        let mut scaled = self.vectors.clone();
        for (j, &s) in values.iter().enumerate() {
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        let prod = &scaled * self.vectors.transpose();
        SymmetricMatrix::symmetrized(prod.as_ref())
    }
}

pub fn eigendecompose(s: &SymmetricMatrix) -> Result<EigenDecomposition> {
    s.check_finite()?;
    let evd = s
        .data
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let n = s.dim();
    let u = evd.U();
    let sv = evd.S().column_vector();
    // faer returns ascending order; reverse to descending.
    let values: Vec<f64> = (0..n).rev().map(|k| sv[k]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| u[(i, n - 1 - k)]);
    Ok(EigenDecomposition { vectors, values })
}

/// Nearest positive semidefinite matrix in Frobenius norm: negative eigenvalues clipped to zero.
pub fn psd_project_frobenius(s: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let evd = eigendecompose(s)?;
    if evd.min_value() >= 0.0 {
        return Ok(s.clone());
    }
    Ok(evd.map_values(|v| v.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
    pub nuclear: f64,
    pub linf_elementwise: f64,
    pub l1_elementwise: f64,
}

pub fn norms(s: &SymmetricMatrix) -> Result<Norms> {
    let vals = s.eigenvalues()?;
    Ok(Norms {
        frobenius: s.frobenius_norm(),
        spectral: vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        nuclear: vals.iter().map(|v| v.abs()).sum(),
        linf_elementwise: s.max_abs(),
        l1_elementwise: s.l1_entrywise(),
    })
}

pub fn spectral_norm(s: &SymmetricMatrix) -> Result<f64> {
    Ok(s.eigenvalues()?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

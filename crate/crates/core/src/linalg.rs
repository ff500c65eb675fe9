//! Small dense linear algebra kernel.
//!
//! Everything here works on row-major [`DenseMatrix`] values with 0-based
//! `(row, col)` indexing. The problem sizes are tiny (tens of rows), so `Q`
//! is always materialized explicitly.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Relative threshold on `|R_ii| / max_j |R_jj|` below which a factorization
/// is declared rank deficient.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is rank deficient: |R[{index},{index}]| / max |R_jj| = {ratio:e}")]
    RankDeficient { index: usize, ratio: f64 },
    #[error("matrix is singular: |R[{index},{index}]| / max |R_jj| = {ratio:e}")]
    Singular { index: usize, ratio: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
}

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
        }
        a
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("{cols} columns"),
                    got: format!("{} columns in row {i}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_transpose dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, &aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut c = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    c[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        c
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Full Householder QR of a tall matrix: `a = q · r` with `q` square
/// orthogonal and `r` upper trapezoidal (zero below the diagonal).
#[derive(Debug, Clone)]
pub struct QrFactorization {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl QrFactorization {
    /// Diagonal of `r`.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.r.cols()).map(|i| self.r[(i, i)]).collect()
    }
}

/// Householder QR without the rank check.
fn householder_qr(a: &DenseMatrix) -> QrFactorization {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = DenseMatrix::identity(m);
    let mut w = vec![0.0; m];

    for k in 0..n.min(m.saturating_sub(1)) {
        let below = (k + 1..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>();
        if below == 0.0 {
            // already upper triangular in this column
            continue;
        }
        let alpha = (r[(k, k)] * r[(k, k)] + below).sqrt();
        // reflect column k onto -sign(r_kk) * alpha * e_k
        let beta = if r[(k, k)] >= 0.0 { -alpha } else { alpha };
        for i in k..m {
            w[i] = r[(i, k)];
        }
        w[k] -= beta;
        let wnorm2 = (k..m).map(|i| w[i] * w[i]).sum::<f64>();
        if wnorm2 == 0.0 {
            continue;
        }
        let scale = 2.0 / wnorm2;

        // r := (I - scale w wᵀ) r
        for j in k..n {
            let s = (k..m).map(|i| w[i] * r[(i, j)]).sum::<f64>() * scale;
            for i in k..m {
                r[(i, j)] -= s * w[i];
            }
        }
        r[(k, k)] = beta;
        for i in k + 1..m {
            r[(i, k)] = 0.0;
        }

        // q := q (I - scale w wᵀ)
        for i in 0..m {
            let s = (k..m).map(|l| q[(i, l)] * w[l]).sum::<f64>() * scale;
            for l in k..m {
                q[(i, l)] -= s * w[l];
            }
        }
    }
    QrFactorization { q, r }
}

/// Index of the first diagonal entry of `r` that falls below the relative
/// rank threshold, with its ratio.
fn rank_defect(qr: &QrFactorization) -> Option<(usize, f64)> {
    let diag = qr.r_diagonal();
    let max = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    diag.iter().enumerate().find_map(|(i, d)| {
        let ratio = if max > 0.0 { d.abs() / max } else { 0.0 };
        (ratio <= RANK_TOL || !ratio.is_finite()).then_some((i, ratio))
    })
}

/// Householder QR of `a` (rows ≥ cols), failing with
/// [`LinalgError::RankDeficient`] when a diagonal entry of `R` is negligible.
pub fn qr_factor(a: &DenseMatrix) -> Result<QrFactorization, LinalgError> {
    if a.rows() < a.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: "rows >= cols".into(),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let qr = householder_qr(a);
    match rank_defect(&qr) {
        Some((index, ratio)) => Err(LinalgError::RankDeficient { index, ratio }),
        None => Ok(qr),
    }
}

/// QR factorization of the transpose of a wide `n × (n+1)` matrix, reused for
/// both the kernel direction and pseudo-inverse solves.
#[derive(Debug, Clone)]
pub struct WideQr {
    qr: QrFactorization,
}

impl WideQr {
    pub fn new(a: &DenseMatrix) -> Result<Self, LinalgError> {
        if a.cols() != a.rows() + 1 {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{}x{}", a.rows(), a.rows() + 1),
                got: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        Ok(WideQr {
            qr: qr_factor(&a.transpose())?,
        })
    }

    pub fn factorization(&self) -> &QrFactorization {
        &self.qr
    }

    /// Last column of `Q`, a unit vector spanning the kernel.
    pub fn kernel(&self) -> Vec<f64> {
        let n1 = self.qr.q.rows();
        let mut k = self.qr.q.col(n1 - 1);
        let nrm = norm2(&k);
        k.iter_mut().for_each(|v| *v /= nrm);
        k
    }

    /// Minimum-norm solution of `a z = b`: `z = Q [R⁻ᵀ b; 0]`.
    pub fn pinv_apply(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.qr.r.cols();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("vector of length {n}"),
                got: format!("length {}", b.len()),
            });
        }
        // forward substitution with Rᵀ (lower triangular)
        let r = &self.qr.r;
        let mut w = vec![0.0; n + 1];
        for i in 0..n {
            let s = (0..i).map(|k| r[(k, i)] * w[k]).sum::<f64>();
            w[i] = (b[i] - s) / r[(i, i)];
        }
        Ok(self.qr.q.matvec(&w))
    }
}

/// Unit vector spanning the kernel of a full-rank `n × (n+1)` matrix.
pub fn kernel_vector(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    Ok(WideQr::new(a)?.kernel())
}

/// `a⁺ b` for a full-rank `n × (n+1)` matrix.
pub fn pseudo_inverse_apply(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    WideQr::new(a)?.pinv_apply(b)
}

/// Solves `a z = b` for square nonsingular `a` via Householder QR.
pub fn solve_square(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("{n}x{n} system with rhs of length {n}"),
            got: format!("{}x{} with rhs of length {}", a.rows(), a.cols(), b.len()),
        });
    }
    let qr = householder_qr(a);
    if let Some((index, ratio)) = rank_defect(&qr) {
        return Err(LinalgError::Singular { index, ratio });
    }
    let qtb = qr.q.matvec_transpose(b);
    let r = &qr.r;
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s = (i + 1..n).map(|k| r[(i, k)] * z[k]).sum::<f64>();
        z[i] = (qtb[i] - s) / r[(i, i)];
    }
    Ok(z)
}

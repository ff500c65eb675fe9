//! Problem data: the stochastic tensor `R`, the map `f_α`, the residual
//! `H(x, α) = αR(x^{⊗m}) + (1 − α)v − x` and its Jacobians.
//!
//! Column convention: the column of `R` for the index tuple `(j₁, …, j_m)`
//! is `j₁·n^{m−1} + j₂·n^{m−2} + … + j_m`, i.e. `j₁` varies slowest. This is
//! the ordering produced by `x ⊗ x ⊗ … ⊗ x` with the left factor outermost,
//! and it is the order used for columns in the tensor text format.

use std::fmt;

use thiserror::Error;

use crate::linalg::{norm1, DenseMatrix};

/// Tolerance on column sums of `R` and on `eᵀv`.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("order m must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tensor is not stochastic ({} violation(s)); first: {}", .0.len(), .0[0])]
    NotStochastic(Vec<Violation>),
    #[error("teleportation vector is not stochastic: {0}")]
    InvalidTeleportation(String),
    #[error("alpha must lie in [0, 1), got {0}")]
    InvalidAlpha(f64),
}

/// One reason a matrix fails to be a stochastic tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape {
        rows: usize,
        cols: usize,
        expected_cols: usize,
    },
    NonFinite {
        row: usize,
        column: usize,
        tuple: Vec<usize>,
    },
    Negative {
        row: usize,
        column: usize,
        tuple: Vec<usize>,
        value: f64,
    },
    ColumnSum {
        column: usize,
        tuple: Vec<usize>,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape {
                rows,
                cols,
                expected_cols,
            } => write!(
                f,
                "matrix is {rows}x{cols}, expected {rows}x{expected_cols}"
            ),
            Violation::NonFinite { row, column, tuple } => {
                write!(
                    f,
                    "non-finite entry at row {row}, column {column} {tuple:?}"
                )
            }
            Violation::Negative {
                row,
                column,
                tuple,
                value,
            } => write!(
                f,
                "negative entry {value:e} at row {row}, column {column} {tuple:?}"
            ),
            Violation::ColumnSum { column, tuple, sum } => {
                write!(f, "column {column} {tuple:?} sums to {sum}")
            }
        }
    }
}

/// Decodes a column index into its `(j₁, …, j_m)` tuple.
pub fn column_tuple(column: usize, n: usize, m: usize) -> Vec<usize> {
    let mut tuple = vec![0; m];
    let mut c = column;
    for slot in (0..m).rev() {
        tuple[slot] = c % n;
        c /= n;
    }
    tuple
}

/// Encodes a `(j₁, …, j_m)` tuple as a column index.
pub fn tuple_column(tuple: &[usize], n: usize) -> usize {
    tuple.iter().fold(0, |acc, &j| acc * n + j)
}

/// Checks nonnegativity and unit column sums of an `n × n^m` matrix.
pub fn validate(r: &DenseMatrix, m: usize) -> Result<(), Vec<Violation>> {
    let n = r.rows();
    let expected_cols = n.checked_pow(m as u32).unwrap_or(usize::MAX);
    if m == 0 || r.cols() != expected_cols {
        return Err(vec![Violation::Shape {
            rows: n,
            cols: r.cols(),
            expected_cols,
        }]);
    }
    let mut violations = Vec::new();
    for column in 0..r.cols() {
        let mut sum = 0.0;
        for row in 0..n {
            let value = r[(row, column)];
            if !value.is_finite() {
                violations.push(Violation::NonFinite {
                    row,
                    column,
                    tuple: column_tuple(column, n, m),
                });
            } else if value < 0.0 {
                violations.push(Violation::Negative {
                    row,
                    column,
                    tuple: column_tuple(column, n, m),
                    value,
                });
            }
            sum += value;
        }
        if sum.is_finite() && (sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(Violation::ColumnSum {
                column,
                tuple: column_tuple(column, n, m),
                sum,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Nonnegative `n × n^m` matrix with unit column sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTensor {
    n: usize,
    m: usize,
    r: DenseMatrix,
}

impl StochasticTensor {
    pub fn new(r: DenseMatrix, m: usize) -> Result<Self, TensorError> {
        if m == 0 {
            return Err(TensorError::InvalidOrder(m));
        }
        validate(&r, m).map_err(TensorError::NotStochastic)?;
        Ok(StochasticTensor { n: r.rows(), m, r })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.r
    }

    /// `R · x^{⊗m}`
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, TensorError> {
        self.check_dim(x)?;
        Ok(self.r.matvec(&kron_power(x, self.m)))
    }

    /// `P_x = R · ∂x^{⊗m}/∂x`, built one identity slot at a time.
    pub fn jacobian_px(&self, x: &[f64]) -> Result<DenseMatrix, TensorError> {
        self.check_dim(x)?;
        let n = self.n;
        let mut px = DenseMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for slot in 0..self.m {
            for j in 0..n {
                unit[j] = 1.0;
                let mut k = vec![1.0];
                for s in 0..self.m {
                    k = kron(&k, if s == slot { &unit } else { x });
                }
                unit[j] = 0.0;
                for (i, v) in self.r.matvec(&k).into_iter().enumerate() {
                    px[(i, j)] += v;
                }
            }
        }
        Ok(px)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), TensorError> {
        if x.len() != self.n {
            return Err(TensorError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ai in a {
        out.extend(b.iter().map(|&bk| ai * bk));
    }
    out
}

/// `x ⊗ x ⊗ … ⊗ x` (`m` factors).
pub fn kron_power(x: &[f64], m: usize) -> Vec<f64> {
    (0..m).fold(vec![1.0], |acc, _| kron(&acc, x))
}

/// A multilinear PageRank instance `(R, v, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    tensor: StochasticTensor,
    v: Vec<f64>,
    alpha: f64,
}

impl Problem {
    pub fn new(tensor: StochasticTensor, v: Vec<f64>, alpha: f64) -> Result<Self, TensorError> {
        if v.len() != tensor.n() {
            return Err(TensorError::DimensionMismatch {
                expected: tensor.n(),
                got: v.len(),
            });
        }
        if let Some(i) = v.iter().position(|&vi| !(vi >= 0.0) || !vi.is_finite()) {
            return Err(TensorError::InvalidTeleportation(format!(
                "entry {i} is {}",
                v[i]
            )));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(TensorError::InvalidTeleportation(format!(
                "entries sum to {sum}"
            )));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(TensorError::InvalidAlpha(alpha));
        }
        Ok(Problem { tensor, v, alpha })
    }

    /// Instance with the uniform teleportation vector `e/n`.
    pub fn uniform(tensor: StochasticTensor, alpha: f64) -> Result<Self, TensorError> {
        let n = tensor.n();
        Self::new(tensor, vec![1.0 / n as f64; n], alpha)
    }

    pub fn tensor(&self) -> &StochasticTensor {
        &self.tensor
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.tensor.n()
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }

    /// Same tensor and teleportation vector with a different `α`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, TensorError> {
        Problem::new(self.tensor.clone(), self.v.clone(), alpha)
    }

    /// `f_α(x) = αR(x^{⊗m}) + (1 − α)v`
    pub fn map(&self, x: &[f64], alpha: f64) -> Result<Vec<f64>, TensorError> {
        let rx = self.tensor.apply(x)?;
        Ok(rx
            .iter()
            .zip(&self.v)
            .map(|(r, v)| alpha * r + (1.0 - alpha) * v)
            .collect())
    }

    /// `H(x, α) = f_α(x) − x`
    pub fn residual(&self, x: &[f64], alpha: f64) -> Result<Vec<f64>, TensorError> {
        let f = self.map(x, alpha)?;
        Ok(f.iter().zip(x).map(|(fi, xi)| fi - xi).collect())
    }

    /// `‖H(x, α)‖₁`
    pub fn residual_norm(&self, x: &[f64], alpha: f64) -> Result<f64, TensorError> {
        Ok(norm1(&self.residual(x, alpha)?))
    }

    /// `∂H/∂x = αP_x − I`
    pub fn jacobian_x(&self, x: &[f64], alpha: f64) -> Result<DenseMatrix, TensorError> {
        let mut j = self.tensor.jacobian_px(x)?;
        for i in 0..self.n() {
            for k in 0..self.n() {
                j[(i, k)] *= alpha;
            }
            j[(i, i)] -= 1.0;
        }
        Ok(j)
    }

    /// `J_H[x, α] = [αP_x − I | R(x^{⊗m}) − v]`, an `n × (n+1)` matrix.
    pub fn jacobian_h(&self, x: &[f64], alpha: f64) -> Result<DenseMatrix, TensorError> {
        let n = self.n();
        let jx = self.jacobian_x(x, alpha)?;
        let rx = self.tensor.apply(x)?;
        let mut j = DenseMatrix::zeros(n, n + 1);
        for i in 0..n {
            for k in 0..n {
                j[(i, k)] = jx[(i, k)];
            }
            j[(i, n)] = rx[i] - self.v[i];
        }
        Ok(j)
    }
}

/// A point `(x, α)` on or near the solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: Vec<f64>,
    pub alpha: f64,
    /// `‖H(x, α)‖₁`
    pub residual_norm: f64,
}

impl CurvePoint {
    pub fn new(p: &Problem, x: Vec<f64>, alpha: f64) -> Result<Self, TensorError> {
        let residual_norm = p.residual_norm(&x, alpha)?;
        Ok(CurvePoint {
            x,
            alpha,
            residual_norm,
        })
    }

    /// Builds a point from its `ℝ^{n+1}` coordinates `(x, α)`.
    pub fn from_coords(p: &Problem, y: &[f64]) -> Result<Self, TensorError> {
        let (alpha, x) = y.split_last().ok_or(TensorError::DimensionMismatch {
            expected: p.n() + 1,
            got: 0,
        })?;
        Self::new(p, x.to_vec(), *alpha)
    }

    /// Coordinates `(x, α)` in `ℝ^{n+1}`.
    pub fn coords(&self) -> Vec<f64> {
        let mut y = self.x.clone();
        y.push(self.alpha);
        y
    }
}

//! Solvers for the multilinear PageRank equation
//! `x = αR(x^{⊗m}) + (1 − α)v` over stochastic vectors `x`.
//!
//! The main entry point is [`continuation::pc_newton`], a predictor-corrector
//! continuation that follows the solution curve in `(x, α)` space from a
//! small `α` up to the requested one. Plain Newton, fixed-point iteration and
//! the experiment harness used to compare them live alongside it.

pub mod bench;
pub mod continuation;
pub mod linalg;
pub mod solvers;
pub mod tensor;

pub use continuation::{pc_newton, trace_curve, ContinuationConfig, Predictor};
pub use linalg::DenseMatrix;
pub use solvers::{SolveReport, SolverOptions, Status};
pub use tensor::{CurvePoint, Problem, StochasticTensor};

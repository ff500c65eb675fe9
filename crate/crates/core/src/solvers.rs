//! Baseline solvers at fixed `α` and the scalar root `c_α`.

use std::fmt;

use crate::linalg::{norm1, solve_square, LinalgError};
use crate::tensor::{CurvePoint, Problem, TensorError};

/// Iterates whose 1-norm exceeds this are reported as [`Status::Diverged`].
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Converged,
    MaxIterations,
    SingularJacobian,
    Diverged,
    /// Continuation hit a rank-deficient `J_H` on the curve.
    SingularPoint,
    /// Continuation step size dropped below its lower bound.
    StepSizeUnderflow,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::SingularJacobian => "singular_jacobian",
            Status::Diverged => "diverged",
            Status::SingularPoint => "singular_point",
            Status::StepSizeUnderflow => "step_size_underflow",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted continuation point together with the tangent and step size
/// used to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub point: CurvePoint,
    pub tangent: Vec<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub status: Status,
    /// One per Newton step, fixed-point step, predictor step or corrector step.
    pub iterations: usize,
    pub residual_norm: f64,
    pub trace: Option<Vec<TraceStep>>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status.is_converged()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Rescale each Newton iterate to unit entry sum.
    pub normalize: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: f64::EPSILON.sqrt(),
            maxit: 10_000,
            normalize: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if self.maxit == 0 {
            return Err("maxit must be at least 1".into());
        }
        Ok(())
    }
}

/// `g(z) = αz^m − z + (1 − α)`
pub fn g(z: f64, alpha: f64, m: usize) -> f64 {
    alpha * z.powi(m as i32) - z + (1.0 - alpha)
}

/// The positive root of `g` other than 1 (equal to 1 when `α = 1/m`).
///
/// Bisection on the bracket that isolates it, `(0, z*)` for `α > 1/m` and
/// `(z*, Z)` for `α < 1/m` where `z* = (αm)^{−1/(m−1)}` minimizes `g`,
/// followed by a Newton polish that is kept only if it reduces `|g|`.
pub fn c_alpha(alpha: f64, m: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "c_alpha needs 0 < alpha < 1");
    assert!(m >= 2, "c_alpha needs m >= 2");
    let am = alpha * m as f64;
    if am == 1.0 {
        return 1.0;
    }
    let exponent = 1.0 / (m as f64 - 1.0);
    let z_star = (1.0 / am).powf(exponent);
    let (mut lo, mut hi) = if am > 1.0 {
        (0.0, z_star.min(1.0))
    } else {
        let upper = 2.0f64.max((1.0 / alpha).powf(exponent) + 1.0);
        (z_star.max(1.0), upper)
    };
    // z = 1 is itself a root; keep it out of the bracket
    if g(lo, alpha, m).signum() == g(hi, alpha, m).signum() {
        return 1.0;
    }
    let g_lo_sign = g(lo, alpha, m).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid, alpha, m).signum() == g_lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = if g(lo, alpha, m).abs() <= g(hi, alpha, m).abs() {
        lo
    } else {
        hi
    };
    for _ in 0..3 {
        let dg = alpha * m as f64 * c.powi(m as i32 - 1) - 1.0;
        if dg == 0.0 {
            break;
        }
        let next = c - g(c, alpha, m) / dg;
        if next > 0.0 && g(next, alpha, m).abs() < g(c, alpha, m).abs() {
            c = next;
        } else {
            break;
        }
    }
    c
}

fn finished(x: Vec<f64>, status: Status, iterations: usize, residual_norm: f64) -> SolveReport {
    SolveReport {
        x,
        status,
        iterations,
        residual_norm,
        trace: None,
    }
}

fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite()) || norm1(x) > DIVERGENCE_BOUND
}

/// Fixed-point iteration `x ← f_α(x)`, calling `observe(k, x_k)` on every
/// iterate including the initial one.
pub fn fixed_point_with<F>(
    p: &Problem,
    x0: &[f64],
    opts: &SolverOptions,
    mut observe: F,
) -> Result<SolveReport, TensorError>
where
    F: FnMut(usize, &[f64]),
{
    let alpha = p.alpha();
    let mut x = x0.to_vec();
    let mut iterations = 0;
    loop {
        observe(iterations, &x);
        let f = p.map(&x, alpha)?;
        let res: f64 = f.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        if res <= opts.tol {
            return Ok(finished(x, Status::Converged, iterations, res));
        }
        if diverged(&f) {
            return Ok(finished(x, Status::Diverged, iterations, res));
        }
        if iterations >= opts.maxit {
            return Ok(finished(x, Status::MaxIterations, iterations, res));
        }
        x = f;
        iterations += 1;
    }
}

/// Fixed-point iteration `x_{k+1} = f_α(x_k)` from `x0`.
pub fn fixed_point(
    p: &Problem,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport, TensorError> {
    fixed_point_with(p, x0, opts, |_, _| {})
}

/// The limit of the fixed-point iteration from `x₀ = 0`, i.e. the unique
/// solution with entry sum `min(1, c_α)`.
pub fn minimal_solution(p: &Problem, opts: &SolverOptions) -> Result<SolveReport, TensorError> {
    fixed_point(p, &vec![0.0; p.n()], opts)
}

/// Newton's method on `H(·, α)` at the problem's `α`.
///
/// Without rescaling the entry sum follows scalar Newton on `g` and settles
/// at `c_α` instead of 1 once `αm > 1`. With `opts.normalize` every iterate
/// is then rescaled to unit entry sum. For `αm < 1` the plain iteration
/// already lands on the stochastic solution. At `αm = 1` the sum would only
/// converge linearly and the Jacobian is singular on the stochastic slice,
/// so with `opts.normalize` the last equation is replaced by `e^T x = 1`.
pub fn newton_fixed_alpha(
    p: &Problem,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport, TensorError> {
    let alpha = p.alpha();
    let am = alpha * p.tensor().order() as f64;
    let rescale = opts.normalize && am > 1.0 + 4.0 * f64::EPSILON;
    let bordered = opts.normalize && (am - 1.0).abs() <= 4.0 * f64::EPSILON;
    let mut x = x0.to_vec();
    let mut iterations = 0;
    loop {
        let h = p.residual(&x, alpha)?;
        let res = norm1(&h);
        if res <= opts.tol {
            return Ok(finished(x, Status::Converged, iterations, res));
        }
        if iterations >= opts.maxit {
            return Ok(finished(x, Status::MaxIterations, iterations, res));
        }
        let mut jac = p.jacobian_x(&x, alpha)?;
        let mut rhs = h;
        if bordered {
            let last = x.len() - 1;
            for j in 0..x.len() {
                jac[(last, j)] = 1.0;
            }
            rhs[last] = x.iter().sum::<f64>() - 1.0;
        }
        let step = match solve_square(&jac, &rhs) {
            Ok(step) => step,
            Err(LinalgError::Singular { .. }) => {
                return Ok(finished(x, Status::SingularJacobian, iterations, res))
            }
            Err(e) => unreachable!("square solve with matching shapes: {e}"),
        };
        iterations += 1;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si;
        }
        if rescale {
            let s: f64 = x.iter().sum();
            if s != 0.0 && s.is_finite() {
                x.iter_mut().for_each(|v| *v /= s);
            }
        }
        if diverged(&x) {
            return Ok(finished(x, Status::Diverged, iterations, res));
        }
    }
}

/// Newton from the standard starting point `(1 − α)v`.
pub fn newton(p: &Problem, opts: &SolverOptions) -> Result<SolveReport, TensorError> {
    let x0: Vec<f64> = p.v().iter().map(|v| (1.0 - p.alpha()) * v).collect();
    newton_fixed_alpha(p, &x0, opts)
}

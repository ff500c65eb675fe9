//! Predictor-corrector continuation along the solution curve
//! `{(x, α) : H(x, α) = 0}` in `ℝ^{n+1}`.
//!
//! Each step predicts along the unit tangent (the kernel of `J_H`), corrects
//! back to the curve with the underdetermined Newton iteration
//! `y ← y − J_H⁺ H(y)`, and adapts the step so that the first correction has
//! 1-norm close to the nominal distance `δ`. Because `α` is just another
//! coordinate, the tracker follows the curve through folds where `α`
//! temporarily decreases.

use thiserror::Error;

use crate::linalg::{dot, norm1, norm2, LinalgError, WideQr};
use crate::solvers::{newton_fixed_alpha, SolveReport, SolverOptions, Status, TraceStep};
use crate::tensor::{CurvePoint, Problem, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("invalid continuation configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("singular point on the curve: {0}")]
    SingularPoint(LinalgError),
    #[error("corrector did not converge after {steps} step(s)")]
    CorrectorDiverged { steps: usize },
    #[error("secant predictor needs two distinct points")]
    DegenerateSecant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// Kernel of `J_H` from a QR factorization.
    Tangent,
    /// Linear extrapolation through the last two accepted points.
    Secant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    pub tol: f64,
    /// Starting `α`; `None` picks [`default_alpha0`].
    pub alpha0: Option<f64>,
    pub tau0: f64,
    /// Nominal 1-norm of the first corrector step.
    pub delta: f64,
    /// Budget shared by Newton, predictor and corrector steps.
    pub maxit: usize,
    pub tau_max_factor: f64,
    pub f_min: f64,
    pub f_retry: f64,
    pub max_corrector: usize,
    pub tau_min: f64,
    pub predictor: Predictor,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            tol: f64::EPSILON.sqrt(),
            alpha0: None,
            tau0: 0.01,
            delta: 0.1,
            maxit: 10_000,
            tau_max_factor: 5.0,
            f_min: 0.5,
            f_retry: 2.0,
            max_corrector: 20,
            tau_min: 1e-10,
            predictor: Predictor::Tangent,
        }
    }
}

/// `min(0.9/m, target/2)`: inside the regime where `αP_x − I` is
/// nonsingular on stochastic vectors, and strictly below the target.
pub fn default_alpha0(target: f64, m: usize) -> f64 {
    (0.9 / m as f64).min(0.5 * target)
}

impl ContinuationConfig {
    pub fn resolve_alpha0(&self, target: f64, m: usize) -> f64 {
        self.alpha0.unwrap_or_else(|| default_alpha0(target, m))
    }

    fn check(&self, alpha0: f64, target: f64) -> Result<(), ContinuationError> {
        let bad = |msg: String| Err(ContinuationError::InvalidConfig(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.tau0 > 0.0) || !(self.delta > 0.0) {
            return bad(format!(
                "tau0 and delta must be positive, got {} and {}",
                self.tau0, self.delta
            ));
        }
        if !(self.f_min < self.f_retry) {
            return bad(format!(
                "f_min ({}) must be below f_retry ({})",
                self.f_min, self.f_retry
            ));
        }
        if self.maxit == 0 || self.max_corrector == 0 {
            return bad("maxit and max_corrector must be at least 1".into());
        }
        if !(alpha0 > 0.0 && alpha0 < target) {
            return bad(format!(
                "alpha0 = {alpha0} must satisfy 0 < alpha0 < {target}"
            ));
        }
        Ok(())
    }

    fn solver_options(&self, maxit: usize) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            maxit,
            normalize: true,
        }
    }
}

/// Unit kernel vector of `J_H` at `y`, signed so that `⟨t_prev, t⟩ ≥ 0`.
pub fn tangent(p: &Problem, y: &CurvePoint, t_prev: &[f64]) -> Result<Vec<f64>, ContinuationError> {
    let jac = p.jacobian_h(&y.x, y.alpha)?;
    let mut t = WideQr::new(&jac)
        .map_err(ContinuationError::SingularPoint)?
        .kernel();
    if dot(t_prev, &t) < 0.0 {
        t.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(t)
}

/// `y + τ t`
pub fn predict(y: &CurvePoint, t: &[f64], tau: f64) -> Vec<f64> {
    y.coords()
        .iter()
        .zip(t)
        .map(|(yi, ti)| yi + tau * ti)
        .collect()
}

/// Unit direction from `y_prev` to `y`.
pub fn secant_direction(
    y: &CurvePoint,
    y_prev: &CurvePoint,
) -> Result<Vec<f64>, ContinuationError> {
    let mut d: Vec<f64> = y
        .coords()
        .iter()
        .zip(y_prev.coords())
        .map(|(a, b)| a - b)
        .collect();
    let nrm = norm2(&d);
    if !(nrm >= 1e-14) {
        return Err(ContinuationError::DegenerateSecant);
    }
    d.iter_mut().for_each(|v| *v /= nrm);
    Ok(d)
}

/// `y + τ (y − y_prev)/‖y − y_prev‖₂`
pub fn predict_secant(
    y: &CurvePoint,
    y_prev: &CurvePoint,
    tau: f64,
) -> Result<Vec<f64>, ContinuationError> {
    Ok(predict(y, &secant_direction(y, y_prev)?, tau))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub point: CurvePoint,
    /// 1-norm of the first Newton correction (0 if none was needed).
    pub first_step_norm: f64,
    pub steps: usize,
}

enum CorrectorStop {
    /// `on_first` asked to abandon the correction.
    Abandoned,
    Failed(ContinuationError),
}

/// Underdetermined Newton correction. `on_first` sees the norm of the first
/// correction and may abandon the loop by returning `false`; `on_step` runs
/// before every correction and may stop it by returning `false` as well.
fn correct_with<F, G>(
    p: &Problem,
    y_hat: &[f64],
    tol: f64,
    max_corrector: usize,
    mut on_first: F,
    mut on_step: G,
) -> Result<Correction, CorrectorStop>
where
    F: FnMut(f64) -> bool,
    G: FnMut() -> bool,
{
    let n = p.n();
    let mut y = y_hat.to_vec();
    let mut first_step_norm = 0.0;
    let mut steps = 0;
    loop {
        let (x, alpha) = (&y[..n], y[n]);
        let h = p
            .residual(x, alpha)
            .map_err(|e| CorrectorStop::Failed(e.into()))?;
        let res = norm1(&h);
        if res <= tol {
            return Ok(Correction {
                point: CurvePoint {
                    x: x.to_vec(),
                    alpha,
                    residual_norm: res,
                },
                first_step_norm,
                steps,
            });
        }
        if steps >= max_corrector || !res.is_finite() || !on_step() {
            return Err(CorrectorStop::Failed(
                ContinuationError::CorrectorDiverged { steps },
            ));
        }
        let jac = p
            .jacobian_h(x, alpha)
            .map_err(|e| CorrectorStop::Failed(e.into()))?;
        let d = WideQr::new(&jac)
            .and_then(|qr| qr.pinv_apply(&h))
            .map_err(|e| CorrectorStop::Failed(ContinuationError::SingularPoint(e)))?;
        steps += 1;
        if steps == 1 {
            first_step_norm = norm1(&d);
            if !on_first(first_step_norm) {
                return Err(CorrectorStop::Abandoned);
            }
        }
        for (yi, di) in y.iter_mut().zip(&d) {
            *yi -= di;
        }
    }
}

/// Runs `y ← y − J_H⁺ H(y)` from `y_hat` until `‖H‖₁ ≤ tol`.
pub fn correct(
    p: &Problem,
    y_hat: &[f64],
    tol: f64,
    max_corrector: usize,
) -> Result<Correction, ContinuationError> {
    if y_hat.len() != p.n() + 1 {
        return Err(TensorError::DimensionMismatch {
            expected: p.n() + 1,
            got: y_hat.len(),
        }
        .into());
    }
    correct_with(p, y_hat, tol, max_corrector, |_| true, || true).map_err(|stop| match stop {
        CorrectorStop::Failed(e) => e,
        CorrectorStop::Abandoned => unreachable!("on_first never abandons"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    pub accept: bool,
    pub new_tau: f64,
    /// Deceleration factor, after clamping to `f_min` on acceptance.
    pub f: f64,
}

/// Deceleration factor `f = √(‖d₁‖₁/δ)`: reject and halve when `f > f_retry`,
/// otherwise accept with `τ ← min(τ / max(f, f_min), tau_max_factor·τ₀)`.
pub fn step_control(first_step_norm: f64, tau: f64, cfg: &ContinuationConfig) -> StepDecision {
    let f = (first_step_norm / cfg.delta).sqrt();
    if f > cfg.f_retry {
        return StepDecision {
            accept: false,
            new_tau: tau / 2.0,
            f,
        };
    }
    let f = f.max(cfg.f_min);
    StepDecision {
        accept: true,
        new_tau: (tau / f).min(cfg.tau_max_factor * cfg.tau0),
        f,
    }
}

/// Mutable state of one continuation run.
#[derive(Debug, Clone)]
pub struct ContinuationState {
    pub y: CurvePoint,
    pub t: Vec<f64>,
    pub tau: f64,
    /// Accepted steps so far.
    pub k: usize,
    pub total_iterations: usize,
    /// Predictor attempts thrown away by step control or corrector failure.
    pub rejected: usize,
}

/// Result of [`trace_curve`].
#[derive(Debug, Clone)]
pub struct CurveTrace {
    pub steps: Vec<TraceStep>,
    pub status: Status,
    pub iterations: usize,
    pub rejected: usize,
}

impl CurveTrace {
    pub fn points(&self) -> impl Iterator<Item = &CurvePoint> {
        self.steps.iter().map(|s| &s.point)
    }
}

struct Tracker<'a> {
    p: &'a Problem,
    cfg: &'a ContinuationConfig,
    state: ContinuationState,
    prev: Option<CurvePoint>,
    steps: Vec<TraceStep>,
}

impl<'a> Tracker<'a> {
    /// Solves at `alpha0` with Newton from `v` and seeds the tracker.
    fn start(
        p: &'a Problem,
        cfg: &'a ContinuationConfig,
        alpha0: f64,
    ) -> Result<Result<Self, SolveReport>, ContinuationError> {
        let start = p.with_alpha(alpha0)?;
        let init = newton_fixed_alpha(&start, p.v(), &cfg.solver_options(cfg.maxit))?;
        if !init.converged() {
            return Ok(Err(init));
        }
        let y = CurvePoint::new(p, init.x, alpha0)?;
        let mut t = vec![0.0; p.n() + 1];
        t[p.n()] = 1.0;
        let steps = vec![TraceStep {
            point: y.clone(),
            tangent: t.clone(),
            tau: cfg.tau0,
        }];
        Ok(Ok(Tracker {
            p,
            cfg,
            state: ContinuationState {
                y,
                t,
                tau: cfg.tau0,
                k: 0,
                total_iterations: init.iterations,
                rejected: 0,
            },
            prev: None,
            steps,
        }))
    }

    fn budget_left(&self) -> bool {
        self.state.total_iterations < self.cfg.maxit
    }

    fn direction(&self) -> Result<Vec<f64>, ContinuationError> {
        match (self.cfg.predictor, &self.prev) {
            (Predictor::Secant, Some(prev)) => secant_direction(&self.state.y, prev),
            _ => tangent(self.p, &self.state.y, &self.state.t),
        }
    }

    /// Produces the next accepted point or a failure status.
    fn advance(&mut self) -> Result<(), Status> {
        let t = match self.direction() {
            Ok(t) => t,
            Err(ContinuationError::SingularPoint(_)) => return Err(Status::SingularPoint),
            Err(_) => return Err(Status::Diverged),
        };
        let mut tau = self.state.tau;
        loop {
            if tau < self.cfg.tau_min {
                return Err(Status::StepSizeUnderflow);
            }
            if !self.budget_left() {
                return Err(Status::MaxIterations);
            }
            self.state.total_iterations += 1;
            let y_hat = predict(&self.state.y, &t, tau);

            let mut decision = None;
            let cfg = self.cfg;
            let iterations = &mut self.state.total_iterations;
            let maxit = cfg.maxit;
            let mut out_of_budget = false;
            let outcome = correct_with(
                self.p,
                &y_hat,
                cfg.tol,
                cfg.max_corrector,
                |first| {
                    let d = step_control(first, tau, cfg);
                    decision = Some(d);
                    d.accept
                },
                || {
                    if *iterations >= maxit {
                        out_of_budget = true;
                        return false;
                    }
                    *iterations += 1;
                    true
                },
            );
            match outcome {
                Ok(correction) => {
                    let d = decision.unwrap_or_else(|| step_control(0.0, tau, cfg));
                    let accepted = correction.point;
                    self.steps.push(TraceStep {
                        point: accepted.clone(),
                        tangent: t.clone(),
                        tau,
                    });
                    self.prev = Some(std::mem::replace(&mut self.state.y, accepted));
                    self.state.t = t;
                    self.state.tau = d.new_tau;
                    self.state.k += 1;
                    return Ok(());
                }
                Err(_) if out_of_budget => return Err(Status::MaxIterations),
                Err(CorrectorStop::Abandoned) => {
                    self.state.rejected += 1;
                    tau = decision.map_or(tau / 2.0, |d| d.new_tau);
                }
                Err(CorrectorStop::Failed(_)) => {
                    self.state.rejected += 1;
                    tau /= 2.0;
                }
            }
        }
    }
}

/// Follows the curve from `α₀` until an accepted point reaches `alpha_stop`
/// or the budget runs out, returning every accepted point.
pub fn trace_curve(
    p: &Problem,
    cfg: &ContinuationConfig,
    alpha_stop: f64,
) -> Result<CurveTrace, ContinuationError> {
    let alpha0 = cfg.resolve_alpha0(alpha_stop, p.order());
    cfg.check(alpha0, f64::INFINITY)?;
    let mut tracker = match Tracker::start(p, cfg, alpha0)? {
        Ok(t) => t,
        Err(init) => {
            return Ok(CurveTrace {
                steps: Vec::new(),
                status: init.status,
                iterations: init.iterations,
                rejected: 0,
            })
        }
    };
    let mut status = Status::Converged;
    while tracker.state.y.alpha < alpha_stop {
        if let Err(s) = tracker.advance() {
            status = s;
            break;
        }
    }
    Ok(CurveTrace {
        steps: tracker.steps,
        status,
        iterations: tracker.state.total_iterations,
        rejected: tracker.state.rejected,
    })
}

/// Predictor-corrector continuation from `α₀` to the problem's `α`, finished
/// by linear interpolation between the two accepted points that bracket the
/// target and a fixed-`α` Newton solve.
pub fn pc_newton(p: &Problem, cfg: &ContinuationConfig) -> Result<SolveReport, ContinuationError> {
    let target = p.alpha();
    let n = p.n();
    let alpha0 = cfg.resolve_alpha0(target, p.order());
    cfg.check(alpha0, target)?;

    let mut tracker = match Tracker::start(p, cfg, alpha0)? {
        Ok(t) => t,
        Err(init) => return Ok(init),
    };
    let fail = |tracker: Tracker, status: Status| {
        let residual_norm = tracker.state.y.residual_norm;
        SolveReport {
            x: tracker.state.y.x,
            status,
            iterations: tracker.state.total_iterations,
            residual_norm,
            trace: Some(tracker.steps),
        }
    };
    while tracker.state.y.alpha < target {
        if let Err(status) = tracker.advance() {
            return Ok(fail(tracker, status));
        }
    }

    let last = &tracker.state.y;
    let prev = tracker.prev.as_ref().expect("at least one accepted step");
    let mut x_hat = interpolate(prev, last, target);
    x_hat.truncate(n);

    let used = tracker.state.total_iterations;
    let remaining = cfg.maxit.saturating_sub(used);
    if remaining == 0 {
        return Ok(fail(tracker, Status::MaxIterations));
    }
    let finish = newton_fixed_alpha(p, &x_hat, &cfg.solver_options(remaining))?;
    Ok(SolveReport {
        x: finish.x,
        status: finish.status,
        iterations: used + finish.iterations,
        residual_norm: finish.residual_norm,
        trace: Some(tracker.steps),
    })
}

/// The interpolated starting point `(x̂, α̂)` used by the final Newton stage,
/// exposed for inspection.
pub fn interpolate(prev: &CurvePoint, last: &CurvePoint, target: f64) -> Vec<f64> {
    let eta = (target - prev.alpha) / (last.alpha - prev.alpha);
    prev.coords()
        .iter()
        .zip(last.coords())
        .map(|(a, b)| a + eta * (b - a))
        .collect()
}

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mlpagerank::bench::{self, io, ExperimentSpec, Method};
use mlpagerank::continuation::{self, ContinuationConfig, Predictor};
use mlpagerank::solvers::{self, SolverOptions, TraceStep};
use mlpagerank::{tensor, DenseMatrix};

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "StochasticTensor", module = "mlpagerank_py")]
#[derive(Clone)]
struct PyStochasticTensor {
    inner: tensor::StochasticTensor,
}

#[pymethods]
impl PyStochasticTensor {
    /// `rows` is the n × n^m matrix R, columns in Kronecker order.
    #[new]
    fn new(rows: Vec<Vec<f64>>, m: usize) -> PyResult<Self> {
        let r = DenseMatrix::from_rows(&rows).map_err(value_error)?;
        let inner = tensor::StochasticTensor::new(r, m).map_err(value_error)?;
        Ok(PyStochasticTensor { inner })
    }

    #[staticmethod]
    fn random(n: usize, m: usize, seed: u64) -> PyResult<Self> {
        if n == 0 || m == 0 {
            return Err(PyValueError::new_err("need n >= 1 and m >= 1"));
        }
        Ok(PyStochasticTensor {
            inner: bench::random_tensor(n, m, seed),
        })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let inner = io::read_tensor(&path).map_err(value_error)?;
        Ok(PyStochasticTensor { inner })
    }

    fn to_text(&self) -> String {
        io::write_tensor(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.order()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        let r = self.inner.matrix();
        (0..r.rows()).map(|i| r.row(i).to_vec()).collect()
    }

    /// R · x^{⊗m}
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&x).map_err(value_error)
    }

    fn jacobian_px(&self, x: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let px = self.inner.jacobian_px(&x).map_err(value_error)?;
        Ok((0..px.rows()).map(|i| px.row(i).to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "StochasticTensor(n={}, m={})",
            self.inner.n(),
            self.inner.order()
        )
    }
}

#[pyclass(name = "Problem", module = "mlpagerank_py")]
#[derive(Clone)]
struct PyProblem {
    inner: tensor::Problem,
}

#[pymethods]
impl PyProblem {
    /// `v` defaults to the uniform vector e/n.
    #[new]
    #[pyo3(signature = (tensor, alpha, v=None))]
    fn new(tensor: &PyStochasticTensor, alpha: f64, v: Option<Vec<f64>>) -> PyResult<Self> {
        let t = tensor.inner.clone();
        let inner = match v {
            Some(v) => tensor::Problem::new(t, v, alpha),
            None => tensor::Problem::uniform(t, alpha),
        }
        .map_err(value_error)?;
        Ok(PyProblem { inner })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.v().to_vec()
    }

    /// H(x, α); `alpha` defaults to the problem's own.
    #[pyo3(signature = (x, alpha=None))]
    fn residual(&self, x: Vec<f64>, alpha: Option<f64>) -> PyResult<Vec<f64>> {
        let a = alpha.unwrap_or(self.inner.alpha());
        self.inner.residual(&x, a).map_err(value_error)
    }

    /// The n × (n+1) Jacobian [αP_x − I | R(x^{⊗m}) − v].
    #[pyo3(signature = (x, alpha=None))]
    fn jacobian_h(&self, x: Vec<f64>, alpha: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
        let a = alpha.unwrap_or(self.inner.alpha());
        let j = self.inner.jacobian_h(&x, a).map_err(value_error)?;
        Ok((0..j.rows()).map(|i| j.row(i).to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(n={}, m={}, alpha={})",
            self.inner.n(),
            self.inner.order(),
            self.inner.alpha()
        )
    }
}

/// One accepted continuation point as `(alpha, x, residual, tau)`.
type TraceRow = (f64, Vec<f64>, f64, f64);

fn trace_rows(steps: &[TraceStep]) -> Vec<TraceRow> {
    steps
        .iter()
        .map(|s| {
            (
                s.point.alpha,
                s.point.x.clone(),
                s.point.residual_norm,
                s.tau,
            )
        })
        .collect()
}

#[pyclass(name = "SolveReport", module = "mlpagerank_py", get_all)]
struct PySolveReport {
    x: Vec<f64>,
    status: String,
    iterations: usize,
    residual_norm: f64,
    trace: Option<Vec<TraceRow>>,
}

#[pymethods]
impl PySolveReport {
    #[getter]
    fn converged(&self) -> bool {
        self.status == solvers::Status::Converged.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(status={}, iterations={}, residual_norm={:e})",
            self.status, self.iterations, self.residual_norm
        )
    }
}

impl From<solvers::SolveReport> for PySolveReport {
    fn from(r: solvers::SolveReport) -> Self {
        PySolveReport {
            x: r.x,
            status: r.status.as_str().to_string(),
            iterations: r.iterations,
            residual_norm: r.residual_norm,
            trace: r.trace.as_deref().map(trace_rows),
        }
    }
}

fn options(tol: Option<f64>, maxit: usize) -> PyResult<SolverOptions> {
    let opts = SolverOptions {
        tol: tol.unwrap_or(f64::EPSILON.sqrt()),
        maxit,
        ..Default::default()
    };
    opts.validate().map_err(PyValueError::new_err)?;
    Ok(opts)
}

fn continuation_config(
    tol: Option<f64>,
    maxit: usize,
    alpha0: Option<f64>,
    tau0: f64,
    delta: f64,
    predictor: &str,
) -> PyResult<ContinuationConfig> {
    let predictor = match predictor {
        "tangent" => Predictor::Tangent,
        "secant" => Predictor::Secant,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown predictor `{other}`"
            )))
        }
    };
    Ok(ContinuationConfig {
        tol: tol.unwrap_or(f64::EPSILON.sqrt()),
        maxit,
        alpha0,
        tau0,
        delta,
        predictor,
        ..Default::default()
    })
}

/// The positive root of αz^m − z + (1 − α) other than 1.
#[pyfunction]
fn c_alpha(alpha: f64, m: usize) -> PyResult<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || m < 2 {
        return Err(PyValueError::new_err("need 0 < alpha < 1 and m >= 2"));
    }
    Ok(solvers::c_alpha(alpha, m))
}

/// Newton at fixed alpha; `x0` defaults to (1 − α)v.
#[pyfunction]
#[pyo3(signature = (problem, x0=None, tol=None, maxit=10_000))]
fn newton(
    problem: &PyProblem,
    x0: Option<Vec<f64>>,
    tol: Option<f64>,
    maxit: usize,
) -> PyResult<PySolveReport> {
    let p = &problem.inner;
    let x0 = x0.unwrap_or_else(|| p.v().iter().map(|v| (1.0 - p.alpha()) * v).collect());
    let r = solvers::newton_fixed_alpha(p, &x0, &options(tol, maxit)?).map_err(value_error)?;
    Ok(r.into())
}

/// Fixed-point iteration; `x0` defaults to v.
#[pyfunction]
#[pyo3(signature = (problem, x0=None, tol=None, maxit=10_000))]
fn fixed_point(
    problem: &PyProblem,
    x0: Option<Vec<f64>>,
    tol: Option<f64>,
    maxit: usize,
) -> PyResult<PySolveReport> {
    let p = &problem.inner;
    let x0 = x0.unwrap_or_else(|| p.v().to_vec());
    let r = solvers::fixed_point(p, &x0, &options(tol, maxit)?).map_err(value_error)?;
    Ok(r.into())
}

#[pyfunction]
#[pyo3(signature = (problem, tol=None, maxit=10_000))]
fn minimal_solution(
    problem: &PyProblem,
    tol: Option<f64>,
    maxit: usize,
) -> PyResult<PySolveReport> {
    let r =
        solvers::minimal_solution(&problem.inner, &options(tol, maxit)?).map_err(value_error)?;
    Ok(r.into())
}

#[pyfunction]
#[pyo3(signature = (problem, tol=None, maxit=10_000, alpha0=None, tau0=0.01, delta=0.1, predictor="tangent"))]
fn pc_newton(
    problem: &PyProblem,
    tol: Option<f64>,
    maxit: usize,
    alpha0: Option<f64>,
    tau0: f64,
    delta: f64,
    predictor: &str,
) -> PyResult<PySolveReport> {
    let cfg = continuation_config(tol, maxit, alpha0, tau0, delta, predictor)?;
    let r = continuation::pc_newton(&problem.inner, &cfg).map_err(value_error)?;
    Ok(r.into())
}

/// Accepted curve points `(alpha, x, residual, tau)` up to `alpha_stop`,
/// followed by the final status string.
#[pyfunction]
#[pyo3(signature = (problem, alpha_stop, tol=None, maxit=10_000, alpha0=None, tau0=0.01, delta=0.1, predictor="tangent"))]
#[allow(clippy::too_many_arguments)]
fn trace_curve(
    problem: &PyProblem,
    alpha_stop: f64,
    tol: Option<f64>,
    maxit: usize,
    alpha0: Option<f64>,
    tau0: f64,
    delta: f64,
    predictor: &str,
) -> PyResult<(Vec<TraceRow>, String)> {
    let cfg = continuation_config(tol, maxit, alpha0, tau0, delta, predictor)?;
    let t = continuation::trace_curve(&problem.inner, &cfg, alpha_stop).map_err(value_error)?;
    Ok((trace_rows(&t.steps), t.status.as_str().to_string()))
}

/// Failure counts `{(method, alpha): failures}` over a seeded random ensemble.
#[pyfunction]
#[pyo3(signature = (methods, alphas, ensemble=1000, n=5, m=2, seed=0))]
fn failure_counts(
    methods: Vec<String>,
    alphas: Vec<f64>,
    ensemble: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> PyResult<Vec<(String, f64, usize)>> {
    let methods = methods
        .iter()
        .map(|s| s.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(PyValueError::new_err)?;
    let spec = ExperimentSpec {
        methods,
        alphas,
        ensemble_size: ensemble,
        n,
        m,
        seed,
        ..Default::default()
    };
    let res = bench::run_experiment(&spec).map_err(PyValueError::new_err)?;
    Ok(res
        .failures
        .iter()
        .map(|f| (f.method.to_string(), f.alpha, f.failures))
        .collect())
}

#[pymodule]
fn mlpagerank_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStochasticTensor>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveReport>()?;
    m.add_function(wrap_pyfunction!(c_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(newton, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_solution, m)?)?;
    m.add_function(wrap_pyfunction!(pc_newton, m)?)?;
    m.add_function(wrap_pyfunction!(trace_curve, m)?)?;
    m.add_function(wrap_pyfunction!(failure_counts, m)?)?;
    Ok(())
}

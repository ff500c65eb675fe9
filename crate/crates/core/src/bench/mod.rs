//! Experiment harness: seeded random tensors, batch runs with failure
//! counting, performance profiles and file I/O, plus the command-line front
//! end in [`cli`].

pub mod cli;
pub mod io;
pub mod profile;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::continuation::{pc_newton, ContinuationConfig, ContinuationError};
use crate::linalg::DenseMatrix;
use crate::solvers::{fixed_point, newton, SolveReport, SolverOptions, Status};
use crate::tensor::{Problem, StochasticTensor, TensorError};

/// Random tensor with one unit entry per column in a uniformly chosen row.
///
/// The generator is ChaCha8 seeded from `seed` through `SeedableRng::seed_from_u64`,
/// so the output is identical on every platform.
pub fn random_tensor(n: usize, m: usize, seed: u64) -> StochasticTensor {
    assert!(n >= 1 && m >= 1, "random_tensor needs n >= 1 and m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = n.pow(m as u32);
    let mut r = DenseMatrix::zeros(n, cols);
    for j in 0..cols {
        r[(rng.gen_range(0..n), j)] = 1.0;
    }
    StochasticTensor::new(r, m).expect("one-hot columns are stochastic")
}

/// Seed of instance `id` in an ensemble seeded with `seed`.
pub fn instance_seed(seed: u64, id: usize) -> u64 {
    seed.wrapping_add(id as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum Method {
    /// Newton from `(1 − α)v`.
    #[value(name = "n")]
    Newton,
    /// Predictor-corrector continuation.
    #[value(name = "pcn")]
    PcNewton,
    /// Fixed-point iteration from `v`.
    #[value(name = "fp")]
    FixedPoint,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Newton => "n",
            Method::PcNewton => "pcn",
            Method::FixedPoint => "fp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n" | "newton" => Ok(Method::Newton),
            "pcn" | "pc-n" => Ok(Method::PcNewton),
            "fp" => Ok(Method::FixedPoint),
            other => Err(format!("unknown method `{other}` (expected n, pcn or fp)")),
        }
    }
}

/// Runs one method on one problem.
pub fn solve(
    method: Method,
    p: &Problem,
    opts: &SolverOptions,
    cfg: &ContinuationConfig,
) -> Result<SolveReport, ContinuationError> {
    Ok(match method {
        Method::Newton => newton(p, opts)?,
        Method::FixedPoint => fixed_point(p, p.v(), opts)?,
        Method::PcNewton => pc_newton(p, cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub ensemble_size: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    pub continuation: ContinuationConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            methods: vec![Method::Newton, Method::PcNewton],
            alphas: vec![0.90, 0.95, 0.99],
            ensemble_size: 1000,
            n: 5,
            m: 2,
            seed: 0,
            solver: SolverOptions::default(),
            continuation: ContinuationConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.ensemble_size == 0 {
            return Err("ensemble size must be at least 1".into());
        }
        if self.methods.is_empty() || self.alphas.is_empty() {
            return Err("need at least one method and one alpha".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(format!("alpha values must lie in (0, 1), got {a}"));
        }
        if self.n == 0 || self.m < 2 {
            return Err(format!(
                "need n >= 1 and m >= 2, got n = {}, m = {}",
                self.n, self.m
            ));
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub id: usize,
    pub method: Method,
    pub alpha: f64,
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
    pub time_s: f64,
}

impl InstanceRecord {
    pub fn failed(&self) -> bool {
        !self.status.is_converged()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureCount {
    pub alpha: f64,
    pub method: Method,
    pub failures: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Sorted by `(id, alpha, method)`.
    pub records: Vec<InstanceRecord>,
    /// One entry per `(alpha, method)`, ordered as in `spec.alphas` and `spec.methods`.
    pub failures: Vec<FailureCount>,
}

impl ExperimentResult {
    pub fn failures_for(&self, method: Method, alpha: f64) -> Option<usize> {
        self.failures
            .iter()
            .find(|f| f.method == method && f.alpha == alpha)
            .map(|f| f.failures)
    }
}

/// Solves every `(instance, α, method)` combination of `spec`, in parallel.
/// Individual solver failures are recorded; only invalid input aborts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, String> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, Method)> = (0..spec.ensemble_size)
        .flat_map(|id| {
            spec.alphas
                .iter()
                .flat_map(move |&a| spec.methods.iter().map(move |&meth| (id, a, meth)))
        })
        .collect();

    let mut records = jobs
        .par_iter()
        .map(|&(id, alpha, method)| {
            let tensor = random_tensor(spec.n, spec.m, instance_seed(spec.seed, id));
            let p = Problem::uniform(tensor, alpha).map_err(|e: TensorError| e.to_string())?;
            let start = Instant::now();
            let report =
                solve(method, &p, &spec.solver, &spec.continuation).map_err(|e| e.to_string())?;
            Ok(InstanceRecord {
                id,
                method,
                alpha,
                status: report.status,
                iterations: report.iterations,
                residual: report.residual_norm,
                time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    records.sort_by(|a, b| {
        (a.id, a.method)
            .cmp(&(b.id, b.method))
            .then(a.alpha.total_cmp(&b.alpha))
    });

    let mut failures = Vec::new();
    for &alpha in &spec.alphas {
        for &method in &spec.methods {
            let runs = records
                .iter()
                .filter(|r| r.alpha == alpha && r.method == method);
            let (runs, failed) = runs.fold((0, 0), |(n, f), r| (n + 1, f + r.failed() as usize));
            failures.push(FailureCount {
                alpha,
                method,
                failures: failed,
                runs,
            });
        }
    }
    Ok(ExperimentResult { records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::validate;

    #[test]
    fn random_tensor_is_one_hot() {
        for seed in 0..20 {
            let t = random_tensor(5, 2, seed);
            assert!(validate(t.matrix(), 2).is_ok());
            for j in 0..25 {
                let col = t.matrix().col(j);
                assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
                assert!(col.iter().all(|&v| v == 0.0 || v == 1.0));
                assert_eq!(col.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn random_tensor_single_row() {
        let t = random_tensor(1, 3, 9);
        assert_eq!(t.matrix().as_slice(), &[1.0]);
    }

    #[test]
    fn random_tensor_is_deterministic() {
        assert_eq!(random_tensor(4, 3, 123), random_tensor(4, 3, 123));
        assert_ne!(random_tensor(4, 3, 123), random_tensor(4, 3, 124));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("PCN".parse::<Method>(), Ok(Method::PcNewton));
        assert_eq!("n".parse::<Method>(), Ok(Method::Newton));
        assert!("pn-imp".parse::<Method>().is_err());
    }

    #[test]
    fn spec_validation() {
        let spec = ExperimentSpec {
            ensemble_size: 0,
            ..Default::default()
        };
        assert!(run_experiment(&spec).is_err());
        let spec = ExperimentSpec {
            alphas: vec![1.0],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn small_experiment_counts_match_records() {
        let spec = ExperimentSpec {
            ensemble_size: 20,
            alphas: vec![0.5, 0.9],
            methods: vec![Method::Newton, Method::PcNewton, Method::FixedPoint],
            ..Default::default()
        };
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.records.len(), 20 * 2 * 3);
        for f in &res.failures {
            let counted = res
                .records
                .iter()
                .filter(|r| r.alpha == f.alpha && r.method == f.method && r.failed())
                .count();
            assert_eq!(counted, f.failures);
            assert_eq!(f.runs, 20);
        }
        assert_eq!(res.failures_for(Method::Newton, 0.5), Some(0));
        assert_eq!(res.failures_for(Method::PcNewton, 0.9), Some(0));
    }
}

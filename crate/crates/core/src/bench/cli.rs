//! `mlpagerank` command line: `solve`, `trace` and `bench`.
//!
//! Exit codes: 0 on success, 1 when a solve fails, 2 on usage, configuration
//! or I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::io::{self, fmt17, IoError};
use super::profile::{emit_profile, Cost};
use super::{random_tensor, run_experiment, solve, ExperimentSpec, Method};
use crate::continuation::{trace_curve, ContinuationConfig, Predictor};
use crate::solvers::SolverOptions;
use crate::tensor::{Problem, StochasticTensor};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "mlpagerank", version, about = "Multilinear PageRank solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print the solution.
    Solve(SolveArgs),
    /// Follow the solution curve and write it as CSV.
    Trace(TraceArgs),
    /// Run a seeded random ensemble and count failures.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
struct Source {
    /// Tensor file (`n m` header, then the rows of R).
    #[arg(long, group = "source")]
    tensor: Option<PathBuf>,
    /// Random one-hot tensor given as `n,m,seed`.
    #[arg(long, group = "source", value_parser = parse_random)]
    random: Option<(usize, usize, u64)>,
}

#[derive(Debug, Args)]
struct Tuning {
    #[arg(long, default_value_t = f64::EPSILON.sqrt())]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    maxit: usize,
    /// Starting alpha for continuation (default min(0.9/m, alpha/2)).
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    tau0: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = PredictorArg::Tangent)]
    predictor: PredictorArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PredictorArg {
    Tangent,
    Secant,
}

impl Tuning {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            maxit: self.maxit,
            ..Default::default()
        }
    }

    fn continuation(&self) -> ContinuationConfig {
        ContinuationConfig {
            tol: self.tol,
            alpha0: self.alpha0,
            tau0: self.tau0,
            delta: self.delta,
            maxit: self.maxit,
            predictor: match self.predictor {
                PredictorArg::Tangent => Predictor::Tangent,
                PredictorArg::Secant => Predictor::Secant,
            },
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_parser = parse_alpha)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Method::PcNewton)]
    method: Method,
    /// Teleportation vector file, or `uniform`.
    #[arg(long, default_value = "uniform")]
    v: String,
    /// Write the accepted continuation points as CSV (pcn only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    source: Source,
    /// Stop once an accepted point reaches this alpha.
    #[arg(long, default_value_t = 1.0)]
    alpha_stop: f64,
    #[arg(long, default_value = "uniform")]
    v: String,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    ensemble: u64,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.90,0.95,0.99", value_parser = parse_open_alpha)]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "n,pcn", value_enum)]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for instances.csv, summary.csv and profile CSVs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

fn parse_random(s: &str) -> Result<(usize, usize, u64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, m, seed] = parts[..] else {
        return Err("expected n,m,seed".into());
    };
    let n: usize = n.parse().map_err(|_| format!("bad n `{n}`"))?;
    let m: usize = m.parse().map_err(|_| format!("bad m `{m}`"))?;
    let seed: u64 = seed.parse().map_err(|_| format!("bad seed `{seed}`"))?;
    if n == 0 || m < 2 {
        return Err("need n >= 1 and m >= 2".into());
    }
    Ok((n, m, seed))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("bad alpha `{s}`"))?;
    if !(0.0..1.0).contains(&a) {
        return Err(format!("alpha must satisfy 0 <= alpha < 1, got {a}"));
    }
    Ok(a)
}

fn parse_open_alpha(s: &str) -> Result<f64, String> {
    let a = parse_alpha(s)?;
    if a == 0.0 {
        return Err("alpha must be positive".into());
    }
    Ok(a)
}

enum CliError {
    Usage(String),
    Io(IoError),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

fn load_problem(source: &Source, v: &str, alpha: f64) -> Result<Problem, CliError> {
    let tensor: StochasticTensor = match (&source.tensor, source.random) {
        (Some(path), _) => io::read_tensor(path)?,
        (None, Some((n, m, seed))) => random_tensor(n, m, seed),
        (None, None) => unreachable!("clap enforces one source"),
    };
    let p = if v == "uniform" {
        Problem::uniform(tensor, alpha)
    } else {
        Problem::new(tensor, io::read_vector(v.as_ref())?, alpha)
    };
    p.map_err(|e| CliError::Usage(e.to_string()))
}

fn run_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let p = load_problem(&args.source, &args.v, args.alpha)?;
    args.tuning.solver().validate().map_err(CliError::Usage)?;
    let report = solve(
        args.method,
        &p,
        &args.tuning.solver(),
        &args.tuning.continuation(),
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    if let (Some(path), Some(trace)) = (&args.trace, &report.trace) {
        io::write_file(path, &io::trace_csv(trace))?;
    }
    let _ = writeln!(out, "status {}", report.status);
    let _ = writeln!(out, "iterations {}", report.iterations);
    let _ = writeln!(out, "residual {}", fmt17(report.residual_norm));
    let _ = writeln!(out, "x");
    for xi in &report.x {
        let _ = writeln!(out, "{}", fmt17(*xi));
    }
    Ok(if report.converged() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn run_trace(args: &TraceArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    if !(args.alpha_stop > 0.0 && args.alpha_stop <= 1.0) {
        return Err(CliError::Usage(format!(
            "alpha-stop must lie in (0, 1], got {}",
            args.alpha_stop
        )));
    }
    let p = load_problem(&args.source, &args.v, 0.0)?;
    let trace = trace_curve(&p, &args.tuning.continuation(), args.alpha_stop)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = io::trace_csv(&trace.steps);
    match &args.out {
        Some(path) => io::write_file(path, &csv)?,
        None => {
            let _ = out.write_all(csv.as_bytes());
        }
    }
    Ok(if trace.status.is_converged() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn run_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let spec = ExperimentSpec {
        methods: args.methods.clone(),
        alphas: args.alphas.clone(),
        ensemble_size: args.ensemble as usize,
        n: args.n,
        m: args.m,
        seed: args.seed,
        solver: args.tuning.solver(),
        continuation: args.tuning.continuation(),
    };
    let result = run_experiment(&spec).map_err(CliError::Usage)?;
    std::fs::create_dir_all(&args.out).map_err(|source| {
        CliError::Io(IoError::File {
            path: args.out.display().to_string(),
            source,
        })
    })?;
    io::write_file(
        &args.out.join("instances.csv"),
        &io::records_csv(&result.records, true),
    )?;
    let summary = io::summary_csv(&result);
    io::write_file(&args.out.join("summary.csv"), &summary)?;
    for &alpha in &spec.alphas {
        let recs: Vec<_> = result
            .records
            .iter()
            .filter(|r| r.alpha == alpha)
            .cloned()
            .collect();
        if let Ok(csv) = emit_profile(&recs, Cost::Iterations) {
            io::write_file(&args.out.join(format!("profile_{alpha}.csv")), &csv)?;
        }
    }
    let _ = out.write_all(summary.as_bytes());
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a, out),
        Command::Trace(a) => run_trace(a, out),
        Command::Bench(a) => run_bench(a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let code = run_with(args, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}

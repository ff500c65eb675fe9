//! Text formats.
//!
//! Tensor files: the first line is `n m`, followed by `n` lines holding the
//! `n^m` entries of each row of `R`, whitespace separated, with columns in
//! Kronecker order (first index slowest). Blank lines and lines starting with
//! `#` are ignored. Vector files hold `n` whitespace-separated numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{ExperimentResult, InstanceRecord};
use crate::linalg::DenseMatrix;
use crate::solvers::TraceStep;
use crate::tensor::{StochasticTensor, TensorError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Formats with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_numbers(line: usize, text: &str) -> Result<Vec<f64>, IoError> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| IoError::Parse {
                line,
                msg: format!("cannot parse `{tok}` as a number"),
            })
        })
        .collect()
}

pub fn parse_tensor(text: &str) -> Result<StochasticTensor, IoError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(IoError::Parse {
        line: 1,
        msg: "empty tensor file".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| IoError::Parse {
            line: hline,
            msg: format!("expected `n m`, got `{header}`"),
        })?;
    let [n, m] = dims[..] else {
        return Err(IoError::Parse {
            line: hline,
            msg: format!("expected `n m`, got `{header}`"),
        });
    };
    if n == 0 || m == 0 {
        return Err(IoError::Parse {
            line: hline,
            msg: "n and m must be positive".into(),
        });
    }
    let cols = n.checked_pow(m as u32).ok_or(IoError::Parse {
        line: hline,
        msg: "n^m overflows".into(),
    })?;
    let mut data = Vec::with_capacity(n * cols);
    for i in 0..n {
        let (line, row) = lines.next().ok_or(IoError::Parse {
            line: hline + i + 1,
            msg: format!("expected {n} rows, found {i}"),
        })?;
        let values = parse_numbers(line, row)?;
        if values.len() != cols {
            return Err(IoError::Parse {
                line,
                msg: format!("expected {cols} entries, found {}", values.len()),
            });
        }
        data.extend(values);
    }
    if let Some((line, _)) = lines.next() {
        return Err(IoError::Parse {
            line,
            msg: "unexpected trailing data".into(),
        });
    }
    Ok(StochasticTensor::new(
        DenseMatrix::from_row_major(n, cols, data),
        m,
    )?)
}

pub fn write_tensor(t: &StochasticTensor) -> String {
    let mut out = format!("{} {}\n", t.n(), t.order());
    for i in 0..t.n() {
        let row: Vec<String> = t.matrix().row(i).iter().map(|&v| fmt_compact(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Shortest round-trip representation.
fn fmt_compact(v: f64) -> String {
    format!("{v}")
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_tensor(path: &Path) -> Result<StochasticTensor, IoError> {
    parse_tensor(&read_file(path)?)
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        out.extend(parse_numbers(line, l)?);
    }
    Ok(out)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, IoError> {
    parse_vector(&read_file(path)?)
}

/// Curve trace CSV: `alpha,x1,...,xn,residual,tau`.
pub fn trace_csv(steps: &[TraceStep]) -> String {
    let n = steps.first().map_or(0, |s| s.point.x.len());
    let mut out = String::from("alpha");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",residual,tau\n");
    for s in steps {
        out.push_str(&fmt17(s.point.alpha));
        for &xi in &s.point.x {
            out.push(',');
            out.push_str(&fmt17(xi));
        }
        let _ = writeln!(out, ",{},{}", fmt17(s.point.residual_norm), fmt17(s.tau));
    }
    out
}

/// Per-instance CSV: `id,method,alpha,status,iterations,residual,time_s`.
/// With `with_time = false` the timing column is left empty.
pub fn records_csv(records: &[InstanceRecord], with_time: bool) -> String {
    let mut out = String::from("id,method,alpha,status,iterations,residual,time_s\n");
    for r in records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},",
            r.id,
            r.method,
            r.alpha,
            r.status,
            r.iterations,
            fmt17(r.residual)
        );
        if with_time {
            let _ = write!(out, "{:.6}", r.time_s);
        }
        out.push('\n');
    }
    out
}

/// Failure counts with one row per `α` and one column per method.
pub fn summary_csv(result: &ExperimentResult) -> String {
    let mut methods = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    for f in &result.failures {
        if !methods.contains(&f.method) {
            methods.push(f.method);
        }
        if !alphas.contains(&f.alpha) {
            alphas.push(f.alpha);
        }
    }
    let mut out = String::from("alpha");
    for m in &methods {
        let _ = write!(out, ",{m}");
    }
    out.push('\n');
    for &a in &alphas {
        let _ = write!(out, "{a}");
        for &m in &methods {
            let _ = write!(out, ",{}", result.failures_for(m, a).unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

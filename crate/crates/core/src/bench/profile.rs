//! Performance profiles: for each method, the fraction of instances whose
//! cost is within a factor `θ` of the best method on that instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{InstanceRecord, Method};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("methods were run on different instance sets ({0} differs from {1})")]
    MismatchedInstances(Method, Method),
    #[error("no records to profile")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cost {
    Iterations,
    Time,
}

/// Instance key: ensemble id and the bit pattern of `α`.
type Key = (usize, u64);

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub methods: Vec<Method>,
    /// `(θ, fraction per method)` rows in increasing `θ`.
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl Profile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta");
        for m in &self.methods {
            let _ = write!(out, ",fraction_{m}");
        }
        out.push('\n');
        for (theta, fractions) in &self.rows {
            let _ = write!(out, "{theta}");
            for f in fractions {
                let _ = write!(out, ",{f}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the profile from per-instance records. Failed runs have infinite
/// cost, so a method that fails on some instance never reaches fraction 1.
pub fn performance_profile(
    records: &[InstanceRecord],
    cost: Cost,
) -> Result<Profile, ProfileError> {
    let mut by_method: BTreeMap<Method, BTreeMap<Key, f64>> = BTreeMap::new();
    for r in records {
        let c = if r.failed() {
            f64::INFINITY
        } else {
            match cost {
                Cost::Iterations => r.iterations as f64,
                Cost::Time => r.time_s,
            }
        };
        by_method
            .entry(r.method)
            .or_default()
            .insert((r.id, r.alpha.to_bits()), c);
    }
    let mut methods = by_method.keys().copied();
    let first = methods.next().ok_or(ProfileError::Empty)?;
    let keys: BTreeSet<Key> = by_method[&first].keys().copied().collect();
    for m in methods {
        if by_method[&m].keys().copied().collect::<BTreeSet<_>>() != keys {
            return Err(ProfileError::MismatchedInstances(first, m));
        }
    }

    let methods: Vec<Method> = by_method.keys().copied().collect();
    let ratios: Vec<Vec<f64>> = methods
        .iter()
        .map(|m| {
            keys.iter()
                .map(|k| {
                    let c = by_method[m][k];
                    let best = methods
                        .iter()
                        .map(|o| by_method[o][k])
                        .fold(f64::INFINITY, f64::min);
                    if c == best && c.is_finite() {
                        1.0
                    } else {
                        c / best
                    }
                })
                .collect()
        })
        .collect();

    let mut thetas: Vec<f64> = ratios
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();

    let total = keys.len() as f64;
    let rows = thetas
        .into_iter()
        .map(|theta| {
            let fractions = ratios
                .iter()
                .map(|rs| rs.iter().filter(|&&r| r <= theta).count() as f64 / total)
                .collect();
            (theta, fractions)
        })
        .collect();
    Ok(Profile { methods, rows })
}

/// CSV form of [`performance_profile`]: `theta,fraction_<method>,...`.
pub fn emit_profile(records: &[InstanceRecord], cost: Cost) -> Result<String, ProfileError> {
    Ok(performance_profile(records, cost)?.to_csv())
}

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::trial::STAGE_DATABASE;
use super::HarnessError;
use crate::dbgen::generate_database;
use crate::detection::collapsed_histograms;
use crate::markov_model::{matching_capacity, MarkovParams};
use crate::rng;

/// Estimated probability that two columns share a collapsed histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub duplicates: usize,
    pub mu_hat: f64,
}

/// For each `(n, m)`, the fraction of fresh databases whose collapsed
/// column histograms contain a repeated value.
///
/// Trial `t` uses the database seed `derive(seed, [t, STAGE_DATABASE])`
/// for every `(n, m)`, matching the experiment harness.
pub fn collision_probe(
    markov: &MarkovParams,
    n_list: &[usize],
    m_list: &[usize],
    trials: usize,
    seed: u64,
    marked_symbol: u8,
) -> Result<Vec<ProbeRow>, HarnessError> {
    if n_list.is_empty() || m_list.is_empty() {
        return Err(HarnessError::Validation {
            field: if n_list.is_empty() {
                "n_list"
            } else {
                "m_list"
            }
            .into(),
            message: "must not be empty".into(),
        });
    }
    if trials == 0 {
        return Err(HarnessError::Validation {
            field: "trials".into(),
            message: "must be at least 1".into(),
        });
    }
    let mut rows = Vec::with_capacity(n_list.len() * m_list.len());
    for &n in n_list {
        for &m in m_list {
            let duplicates = (0..trials as u64)
                .into_par_iter()
                .map(|t| -> Result<usize, HarnessError> {
                    let db_seed = rng::derive(seed, &[t, STAGE_DATABASE]);
                    let db = generate_database(markov, m, n, db_seed).map_err(|e| {
                        HarnessError::Trial {
                            trial: t,
                            message: e.to_string(),
                        }
                    })?;
                    let h = collapsed_histograms(&db, marked_symbol).map_err(|e| {
                        HarnessError::Trial {
                            trial: t,
                            message: e.to_string(),
                        }
                    })?;
                    Ok(usize::from(h.has_duplicates()))
                })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            rows.push(ProbeRow {
                n,
                m,
                trials,
                duplicates,
                mu_hat: duplicates as f64 / trials as f64,
            });
        }
    }
    Ok(rows)
}

pub fn write_probe_csv<W: Write>(rows: &[ProbeRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,m,trials,duplicates,mu_hat")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.6}",
            r.n, r.m, r.trials, r.duplicates, r.mu_hat
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRow {
    pub delta: f64,
    pub capacity_bits: f64,
    pub closed_form_bits: f64,
    pub terms_used: u32,
    pub tail_bound_bits: f64,
    /// Series and closed form agree within the tail bound plus 1e-9.
    pub consistent: bool,
}

/// Capacity for each deletion probability, with the cross-check flag.
pub fn capacity_table(
    markov: &MarkovParams,
    deltas: &[f64],
    tolerance: f64,
) -> Result<Vec<CapacityRow>, HarnessError> {
    deltas
        .iter()
        .map(|&delta| {
            let c = matching_capacity(markov, delta, tolerance).map_err(|e| {
                HarnessError::Validation {
                    field: "delta".into(),
                    message: e.to_string(),
                }
            })?;
            Ok(CapacityRow {
                delta,
                capacity_bits: c.capacity_bits,
                closed_form_bits: c.closed_form_bits,
                terms_used: c.terms_used,
                tail_bound_bits: c.tail_bound_bits,
                consistent: c.is_consistent(),
            })
        })
        .collect()
}

pub fn write_capacity_csv<W: Write>(rows: &[CapacityRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "delta,capacity_bits,closed_form_bits,terms_used,tail_bound_bits,consistent"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.12},{:.12},{},{:.3e},{}",
            r.delta,
            r.capacity_bits,
            r.closed_form_bits,
            r.terms_used,
            r.tail_bound_bits,
            r.consistent
        )?;
    }
    Ok(())
}

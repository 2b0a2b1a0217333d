use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::trial::{run_trial, TrialDetection, TrialRecord};
use super::HarnessError;
use crate::markov_model::matching_capacity;

/// Header of `summary.csv`.
pub const SUMMARY_HEADER: &str = "n,m,R_realized,delta,gamma,capacity_bits,trials,detection_error_rate,row_error_rate_mean,row_error_rate_ci_lo,row_error_rate_ci_hi";

/// Tolerance used for the capacity column.
pub const SUMMARY_CAPACITY_TOLERANCE: f64 = 1e-10;

/// Normal quantile for 95% intervals.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Record per-trial wall time. Disable for byte-reproducible `trials.jsonl`.
    pub record_timing: bool,
}

/// Aggregate of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub n: usize,
    pub m: usize,
    pub r_realized: f64,
    pub delta: f64,
    pub gamma: f64,
    pub capacity_bits: f64,
    pub trials: usize,
    pub detection_error_rate: f64,
    pub row_error_rate_mean: f64,
    pub row_error_rate_ci_lo: f64,
    pub row_error_rate_ci_hi: f64,
}

impl SummaryRow {
    pub fn ci_overlaps(&self, other: &SummaryRow) -> bool {
        self.row_error_rate_ci_lo <= other.row_error_rate_ci_hi
            && other.row_error_rate_ci_lo <= self.row_error_rate_ci_hi
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{:.6},{},{},{:.12},{},{:.6},{:.6},{:.6},{:.6}",
            self.n,
            self.m,
            self.r_realized,
            self.delta,
            self.gamma,
            self.capacity_bits,
            self.trials,
            self.detection_error_rate,
            self.row_error_rate_mean,
            self.row_error_rate_ci_lo,
            self.row_error_rate_ci_hi
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: Vec<SummaryRow>,
    pub trials: Vec<TrialRecord>,
}

/// Wilson score interval for a proportion `p` observed over `n` samples.
pub fn wilson_interval(p: f64, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).max(0.0).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Summarises the records of one cell, which must be in trial order.
///
/// The interval is a Wilson interval on the mean row-error rate with the
/// trial count as sample size. Per-trial rates lie in `[0, 1]`, so their
/// variance is at most `p(1 − p)` and the interval is conservative.
pub fn summarize(
    config: &ExperimentConfig,
    cell: &super::config::Cell,
    records: &[TrialRecord],
) -> Result<SummaryRow, HarnessError> {
    let trials = records.len();
    let mean = if trials == 0 {
        0.0
    } else {
        records.iter().map(|r| r.row_error_rate).sum::<f64>() / trials as f64
    };
    let detection_errors = records
        .iter()
        .filter(|r| r.detection_status != TrialDetection::Recovered)
        .count();
    let (lo, hi) = wilson_interval(mean, trials, Z_95);
    let capacity = matching_capacity(&config.markov, cell.delta(), SUMMARY_CAPACITY_TOLERANCE)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    Ok(SummaryRow {
        cell: cell.index,
        n: config.n,
        m: cell.rows.m,
        r_realized: cell.rows.realized_rate(config.n),
        delta: cell.delta(),
        gamma: config.markov.gamma(),
        capacity_bits: capacity.capacity_bits,
        trials,
        detection_error_rate: if trials == 0 {
            0.0
        } else {
            detection_errors as f64 / trials as f64
        },
        row_error_rate_mean: mean,
        row_error_rate_ci_lo: lo,
        row_error_rate_ci_hi: hi,
    })
}

/// Runs every trial of every cell and aggregates per cell.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<ExperimentOutput, HarnessError> {
    let cells = config.cells();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.trials as u64).map(move |t| (c, t)))
        .collect();

    let run = || -> Result<Vec<TrialRecord>, HarnessError> {
        jobs.par_iter()
            .map(|&(c, t)| {
                let mut record = run_trial(config, &cells[c], t)?;
                if !options.record_timing {
                    record.wall_time_ms = 0;
                }
                Ok(record)
            })
            .collect()
    };
    let trials = if options.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| HarnessError::Runtime(e.to_string()))?
            .install(run)?
    } else {
        run()?
    };

    let summary = cells
        .iter()
        .zip(trials.chunks(config.trials))
        .map(|(cell, records)| summarize(config, cell, records))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentOutput { summary, trials })
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    Ok(())
}

pub fn write_trials_jsonl<W: Write>(records: &[TrialRecord], mut w: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `summary.csv` and `trials.jsonl` into `dir`, creating it if needed.
pub fn write_outputs(output: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<(), HarnessError> {
    let dir = dir.as_ref();
    let io = |e: std::io::Error| HarnessError::Runtime(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut summary = BufWriter::new(File::create(dir.join("summary.csv")).map_err(io)?);
    write_summary_csv(&output.summary, &mut summary).map_err(io)?;
    summary.flush().map_err(io)?;
    let mut trials = BufWriter::new(File::create(dir.join("trials.jsonl")).map_err(io)?);
    write_trials_jsonl(&output.trials, &mut trials).map_err(io)?;
    trials.flush().map_err(io)?;
    Ok(())
}

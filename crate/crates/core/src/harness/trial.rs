use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig};
use super::HarnessError;
use crate::dbgen::{apply_permutation, generate_database_within, sample_permutation};
use crate::detection::{collapsed_histograms, detect_pattern, DetectionFailure, DetectionStatus};
use crate::matching::{evaluate, match_rows, reduce};
use crate::repetition::{apply_repetitions, sample_pattern, RepetitionPattern};
use crate::rng;

/// Stage tags mixed into the per-trial seed path.
pub const STAGE_DATABASE: u64 = 1;
pub const STAGE_PERMUTATION: u64 = 2;
pub const STAGE_PATTERN: u64 = 3;

/// Seeds of one trial: `derive(master_seed, [trial_index, stage])`.
/// Independent of the sweep cell, so cells share randomness trial by trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub database: u64,
    pub permutation: u64,
    pub pattern: u64,
}

impl TrialSeeds {
    pub fn derive(master_seed: u64, trial_index: u64) -> Self {
        TrialSeeds {
            database: rng::derive(master_seed, &[trial_index, STAGE_DATABASE]),
            permutation: rng::derive(master_seed, &[trial_index, STAGE_PERMUTATION]),
            pattern: rng::derive(master_seed, &[trial_index, STAGE_PATTERN]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialDetection {
    Recovered,
    DuplicateHistogram,
    InconsistentBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial_index: u64,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub seeds: TrialSeeds,
    pub true_pattern: RepetitionPattern,
    pub detection_status: TrialDetection,
    pub detection_duplicate: bool,
    pub row_error_rate: f64,
    pub collisions: usize,
    pub misses: usize,
    /// Zero when timing is disabled.
    pub wall_time_ms: u64,
}

/// Runs the full pipeline once: generate, shuffle, repeat, detect, reduce,
/// match and score.
pub fn run_trial(
    config: &ExperimentConfig,
    cell: &Cell,
    trial_index: u64,
) -> Result<TrialRecord, HarnessError> {
    let started = Instant::now();
    let at = |message: String| HarnessError::Trial {
        trial: trial_index,
        message,
    };
    let n = config.n;
    let m = cell.rows.m;
    let seeds = TrialSeeds::derive(config.master_seed, trial_index);

    let db1 = generate_database_within(&config.markov, m, n, seeds.database, config.memory_budget)
        .map_err(|e| at(e.to_string()))?;
    let theta = sample_permutation(m, seeds.permutation);
    let shuffled = apply_permutation(&db1, &theta).map_err(|e| at(e.to_string()))?;
    let pattern = sample_pattern(&cell.repetition, n, seeds.pattern);
    let db2 = apply_repetitions(&shuffled, &pattern).map_err(|e| at(e.to_string()))?;

    let h1 = collapsed_histograms(&db1, config.marked_symbol).map_err(|e| at(e.to_string()))?;
    let h2 = collapsed_histograms(&db2, config.marked_symbol).map_err(|e| at(e.to_string()))?;
    let detected = detect_pattern(&h1, &h2).map_err(|e| at(e.to_string()))?;

    let mut record = TrialRecord {
        cell: cell.index,
        trial_index,
        n,
        m,
        delta: cell.delta(),
        seeds,
        true_pattern: pattern.clone(),
        detection_status: TrialDetection::Recovered,
        detection_duplicate: false,
        row_error_rate: 1.0,
        collisions: 0,
        misses: m,
        wall_time_ms: 0,
    };

    match detected.status() {
        DetectionStatus::DetectionError(DetectionFailure::DuplicateHistogram) => {
            record.detection_status = TrialDetection::DuplicateHistogram;
            record.detection_duplicate = true;
        }
        DetectionStatus::DetectionError(DetectionFailure::InconsistentBlocks) => {
            // Unreachable for channel outputs with distinct histograms.
            return Err(HarnessError::Invariant {
                trial: trial_index,
                message: "histograms distinct but blocks inconsistent".into(),
            });
        }
        DetectionStatus::Recovered => {
            if detected.s_hat() != pattern.counts() {
                return Err(HarnessError::Invariant {
                    trial: trial_index,
                    message: format!(
                        "recovered pattern {:?} differs from the true pattern {:?}",
                        detected.s_hat(),
                        pattern.counts()
                    ),
                });
            }
            let reduced = reduce(&db2, &detected).map_err(|e| at(e.to_string()))?;
            let mut matcher = config.matcher;
            matcher.delta_for_typicality = cell.delta();
            let result = match_rows(&db1, &reduced, &config.markov, &matcher)
                .map_err(|e| at(e.to_string()))?;
            record.row_error_rate = evaluate(&result, &theta).map_err(|e| at(e.to_string()))?;
            record.collisions = result.collisions;
            record.misses = result.misses;
        }
    }
    record.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(record)
}

//! The column repetition channel.
//!
//! Each column of the database is independently deleted (`S = 0`), kept
//! (`S = 1`) or replicated (`S ≥ 2`) according to a repetition distribution.
//! The same pattern applies to every row.

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dbgen::Database;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepetitionError {
    #[error("invalid repetition distribution: {0}")]
    InvalidDistribution(String),
    #[error("pattern length {pattern} does not match {cols} database columns")]
    SizeMismatch { pattern: usize, cols: usize },
}

/// `p_S` over `{0, …, s_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct RepetitionDistribution {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for RepetitionDistribution {
    type Error = RepetitionError;
    fn try_from(raw: RawDistribution) -> Result<Self, Self::Error> {
        RepetitionDistribution::new(raw.probs)
    }
}

impl From<RepetitionDistribution> for RawDistribution {
    fn from(d: RepetitionDistribution) -> Self {
        RawDistribution { probs: d.probs }
    }
}

impl RepetitionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, RepetitionError> {
        if probs.is_empty() {
            return Err(RepetitionError::InvalidDistribution("no entries".into()));
        }
        if let Some((s, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(RepetitionError::InvalidDistribution(format!(
                "p_S({s}) = {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(RepetitionError::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(RepetitionDistribution { probs })
    }

    /// All mass on a single repetition count.
    pub fn point_mass(s: usize) -> Self {
        let mut probs = vec![0.0; s + 1];
        probs[s] = 1.0;
        RepetitionDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn s_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Deletion probability `p_S(0)`.
    pub fn delta(&self) -> f64 {
        self.probs[0]
    }
}

/// Per-column repetition counts. Serialises as a plain JSON integer array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RepetitionPattern {
    s: Vec<u32>,
}

impl RepetitionPattern {
    pub fn new(s: Vec<u32>) -> Self {
        RepetitionPattern { s }
    }

    pub fn counts(&self) -> &[u32] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// `K = Σ S_j`, the width of the repeated database.
    pub fn total_width(&self) -> usize {
        self.s.iter().map(|&v| v as usize).sum()
    }

    pub fn deleted_columns(&self) -> usize {
        self.s.iter().filter(|&&v| v == 0).count()
    }
}

/// Output of the channel: rows in channel order, columns replicated or
/// removed. The generating pattern is not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedDatabase {
    inner: Database,
}

impl RepeatedDatabase {
    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    pub fn as_database(&self) -> &Database {
        &self.inner
    }

    pub fn into_database(self) -> Database {
        self.inner
    }
}

impl From<Database> for RepeatedDatabase {
    fn from(inner: Database) -> Self {
        RepeatedDatabase { inner }
    }
}

impl AsRef<Database> for RepeatedDatabase {
    fn as_ref(&self) -> &Database {
        &self.inner
    }
}

impl AsRef<Database> for Database {
    fn as_ref(&self) -> &Database {
        self
    }
}

/// Draws `n` i.i.d. repetition counts.
pub fn sample_pattern(dist: &RepetitionDistribution, n: usize, seed: u64) -> RepetitionPattern {
    let mut rng = rng::stream(seed);
    let sampler = WeightedIndex::new(dist.probs()).expect("validated distribution");
    let s = (0..n).map(|_| sampler.sample(&mut rng) as u32).collect();
    RepetitionPattern { s }
}

/// Replaces column `j` by `S_j` contiguous copies of itself, in column order.
pub fn apply_repetitions(
    db: &Database,
    pattern: &RepetitionPattern,
) -> Result<RepeatedDatabase, RepetitionError> {
    if pattern.len() != db.cols() {
        return Err(RepetitionError::SizeMismatch {
            pattern: pattern.len(),
            cols: db.cols(),
        });
    }
    let width = pattern.total_width();
    let mut entries = Vec::with_capacity(db.rows() * width);
    for row in db.iter_rows() {
        for (&symbol, &times) in row.iter().zip(pattern.counts()) {
            entries.extend(std::iter::repeat_n(symbol, times as usize));
        }
    }
    Ok(RepeatedDatabase {
        inner: Database::from_parts_unchecked(db.rows(), width, db.alphabet_size(), entries),
    })
}

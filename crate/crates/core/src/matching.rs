//! Erasure reduction and row matching.
//!
//! Once the repetition pattern is known, the repeated database is reduced
//! to width n: deleted columns become erasures and extra replicas are
//! dropped. Each reduced row is then matched to the rows of the original
//! database that agree with it on every retained column. The channel is
//! noiseless on retained symbols, so every consistent row has the same
//! likelihood and the unique-consistent-row rule is the maximum-likelihood
//! decision with a uniqueness requirement.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_128;

use crate::dbgen::{Database, Permutation};
use crate::detection::DetectedPattern;
use crate::markov_model::{self, binary_entropy, MarkovParams, ModelError};
use crate::repetition::RepeatedDatabase;

/// Erasure marker. Never a valid symbol.
pub const ERASED: u8 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("pattern does not describe the repeated database: {0}")]
    PatternMismatch(String),
    #[error("width mismatch: database has {db1} columns, reduced has {reduced}")]
    WidthMismatch { db1: usize, reduced: usize },
    #[error("row count mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("column {col} is only partially erased")]
    PartialErasure { col: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `m × n` matrix over the alphabet plus [`ERASED`]; erasures occupy whole columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedDatabase {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
    erased: Vec<bool>,
}

impl ReducedDatabase {
    /// Validates that every column is either fully erased or erasure-free.
    pub fn new(rows: usize, cols: usize, entries: Vec<u8>) -> Result<Self, MatchError> {
        if entries.len() != rows * cols {
            return Err(MatchError::SizeMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        let mut erased = vec![false; cols];
        for (j, flag) in erased.iter_mut().enumerate() {
            let hits = (0..rows)
                .filter(|&i| entries[i * cols + j] == ERASED)
                .count();
            if hits != 0 && hits != rows {
                return Err(MatchError::PartialErasure { col: j });
            }
            *flag = rows > 0 && hits == rows;
        }
        Ok(ReducedDatabase {
            rows,
            cols,
            entries,
            erased,
        })
    }

    /// Copies `db` with the flagged columns erased.
    pub fn erase_columns(db: &Database, erased: &[bool]) -> Result<Self, MatchError> {
        if erased.len() != db.cols() {
            return Err(MatchError::WidthMismatch {
                db1: db.cols(),
                reduced: erased.len(),
            });
        }
        let mut entries = db.entries().to_vec();
        for row in entries.chunks_mut(db.cols().max(1)) {
            for (v, &e) in row.iter_mut().zip(erased) {
                if e {
                    *v = ERASED;
                }
            }
        }
        Ok(ReducedDatabase {
            rows: db.rows(),
            cols: db.cols(),
            entries,
            erased: erased.to_vec(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn is_erased(&self, col: usize) -> bool {
        self.erased[col]
    }

    pub fn erased_mask(&self) -> &[bool] {
        &self.erased
    }

    /// Indices of columns that carry symbols.
    pub fn retained_columns(&self) -> Vec<usize> {
        (0..self.cols).filter(|&j| !self.erased[j]).collect()
    }
}

/// Keeps the first replica of each surviving column and erases deleted ones.
pub fn reduce(
    repeated: &RepeatedDatabase,
    pattern: &DetectedPattern,
) -> Result<ReducedDatabase, MatchError> {
    if !pattern.is_recovered() {
        return Err(MatchError::PatternMismatch(
            "pattern was not recovered".into(),
        ));
    }
    let s_hat = pattern.s_hat();
    let width: usize = s_hat.iter().map(|&s| s as usize).sum();
    if width != repeated.cols() {
        return Err(MatchError::PatternMismatch(format!(
            "pattern width {width} but repeated database has {} columns",
            repeated.cols()
        )));
    }
    // Source column in the repeated database for each output column.
    let mut source = Vec::with_capacity(s_hat.len());
    let mut offset = 0usize;
    for &s in s_hat {
        source.push((s > 0).then_some(offset));
        offset += s as usize;
    }
    let db = repeated.as_database();
    let n = s_hat.len();
    let mut entries = Vec::with_capacity(db.rows() * n);
    for row in db.iter_rows() {
        entries.extend(source.iter().map(|src| src.map_or(ERASED, |k| row[k])));
    }
    Ok(ReducedDatabase {
        rows: db.rows(),
        cols: n,
        entries,
        erased: source.iter().map(Option::is_none).collect(),
    })
}

/// Per-row matching outcome. `assignment[l]` is the row of the original
/// database matched to reduced row `l`, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub assignment: Vec<Option<usize>>,
    /// Rows with more than one candidate.
    pub collisions: usize,
    /// Rows with no candidate.
    pub misses: usize,
}

impl MatchResult {
    fn from_counts(counts: Vec<(usize, Option<usize>)>) -> Self {
        let mut collisions = 0;
        let mut misses = 0;
        let assignment = counts
            .into_iter()
            .map(|(count, first)| match count {
                0 => {
                    misses += 1;
                    None
                }
                1 => first,
                _ => {
                    collisions += 1;
                    None
                }
            })
            .collect();
        MatchResult {
            assignment,
            collisions,
            misses,
        }
    }

    pub fn unmatched(m: usize) -> Self {
        MatchResult {
            assignment: vec![None; m],
            collisions: 0,
            misses: m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Consistency,
    Typicality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub method: MatchMethod,
    #[serde(default)]
    pub epsilon: f64,
    /// Erasure probability assumed by the typicality test.
    #[serde(default)]
    pub delta_for_typicality: f64,
}

impl MatcherConfig {
    pub fn consistency() -> Self {
        MatcherConfig {
            method: MatchMethod::Consistency,
            epsilon: 0.0,
            delta_for_typicality: 0.0,
        }
    }

    pub fn typicality(epsilon: f64, delta: f64) -> Self {
        MatcherConfig {
            method: MatchMethod::Typicality,
            epsilon,
            delta_for_typicality: delta,
        }
    }

    pub fn validate(&self) -> Result<(), MatchError> {
        if self.method == MatchMethod::Typicality {
            if self.epsilon.is_nan() || self.epsilon <= 0.0 {
                return Err(MatchError::InvalidEpsilon(self.epsilon));
            }
            if !(0.0..=1.0).contains(&self.delta_for_typicality) {
                return Err(ModelError::InvalidDelta(self.delta_for_typicality).into());
            }
        }
        Ok(())
    }
}

/// Hash index over the projection of each row onto a fixed set of columns.
///
/// Keys are 128-bit XXH3 digests of the projected symbols; probes compare
/// the full projection, so digest collisions never produce false matches.
pub struct ConsistencyIndex<'a> {
    db: &'a Database,
    retained: Vec<usize>,
    buckets: HashMap<u128, Vec<u32>>,
}

fn project_into(row: &[u8], cols: &[usize], buf: &mut Vec<u8>) {
    buf.clear();
    buf.extend(cols.iter().map(|&j| row[j]));
}

impl<'a> ConsistencyIndex<'a> {
    pub fn build(db: &'a Database, retained: Vec<usize>) -> Self {
        let mut buckets: HashMap<u128, Vec<u32>> = HashMap::with_capacity(db.rows());
        let mut key = Vec::with_capacity(retained.len());
        for (i, row) in db.iter_rows().enumerate() {
            project_into(row, &retained, &mut key);
            buckets.entry(xxh3_128(&key)).or_default().push(i as u32);
        }
        ConsistencyIndex {
            db,
            retained,
            buckets,
        }
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    fn matches(&self, row: usize, key: &[u8]) -> bool {
        let x = self.db.row(row);
        self.retained.iter().zip(key).all(|(&j, &v)| x[j] == v)
    }

    /// Rows consistent with `query` (a full-width row; only retained
    /// columns are read), in ascending order.
    pub fn candidates(&self, query: &[u8]) -> Vec<usize> {
        let mut key = Vec::with_capacity(self.retained.len());
        project_into(query, &self.retained, &mut key);
        self.buckets
            .get(&xxh3_128(&key))
            .into_iter()
            .flatten()
            .map(|&i| i as usize)
            .filter(|&i| self.matches(i, &key))
            .collect()
    }

    /// Number of consistent rows and the first of them.
    fn count_candidates(&self, query: &[u8]) -> (usize, Option<usize>) {
        let mut key = Vec::with_capacity(self.retained.len());
        project_into(query, &self.retained, &mut key);
        let mut count = 0;
        let mut first = None;
        for &i in self.buckets.get(&xxh3_128(&key)).into_iter().flatten() {
            let i = i as usize;
            if self.matches(i, &key) {
                count += 1;
                first.get_or_insert(i);
            }
        }
        (count, first)
    }
}

fn check_shapes(db1: &Database, reduced: &ReducedDatabase) -> Result<(), MatchError> {
    if db1.cols() != reduced.cols() {
        return Err(MatchError::WidthMismatch {
            db1: db1.cols(),
            reduced: reduced.cols(),
        });
    }
    if db1.rows() != reduced.rows() {
        return Err(MatchError::SizeMismatch {
            expected: db1.rows(),
            actual: reduced.rows(),
        });
    }
    Ok(())
}

/// Matches each reduced row to its unique consistent row, via a hash join.
pub fn match_consistency(
    db1: &Database,
    reduced: &ReducedDatabase,
) -> Result<MatchResult, MatchError> {
    check_shapes(db1, reduced)?;
    let index = ConsistencyIndex::build(db1, reduced.retained_columns());
    let counts = (0..reduced.rows())
        .into_par_iter()
        .map(|l| index.count_candidates(reduced.row(l)))
        .collect();
    Ok(MatchResult::from_counts(counts))
}

/// `k · log₂ p`, zero when `k = 0`.
fn count_log(k: usize, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.log2()
    }
}

/// `log₂ p(xⁿ)` under the Markov source; symbols are 1-based.
pub fn markov_log_prob(params: &MarkovParams, row: &[u8]) -> f64 {
    let Some(&first) = row.first() else {
        return 0.0;
    };
    let u = params.stationary();
    let mut lp = u[first as usize - 1].log2();
    for w in row.windows(2) {
        lp += params
            .power_entry(1, w[0] as usize - 1, w[1] as usize - 1)
            .log2();
    }
    lp
}

/// `log₂ p(ȳⁿ)` for a reduced row: the erasure pattern times the Markov
/// probability of the retained symbols, linked by multi-step transitions.
pub fn output_log_prob(params: &MarkovParams, row: &[u8], delta: f64) -> f64 {
    let erased = row.iter().filter(|&&v| v == ERASED).count();
    let mut lp = count_log(erased, delta) + count_log(row.len() - erased, 1.0 - delta);
    let u = params.stationary();
    let mut prev: Option<(usize, u8)> = None;
    for (j, &v) in row.iter().enumerate() {
        if v == ERASED {
            continue;
        }
        lp += match prev {
            None => u[v as usize - 1].log2(),
            Some((pj, pv)) => params
                .power_entry((j - pj) as u32, pv as usize - 1, v as usize - 1)
                .log2(),
        };
        prev = Some((j, v));
    }
    lp
}

/// `log₂ p(ȳⁿ | xⁿ)` for the memoryless erasure channel; `-∞` if `x` and
/// `ȳ` disagree on a retained column.
pub fn erasure_log_likelihood(x: &[u8], y: &[u8], delta: f64) -> f64 {
    let mut erased = 0;
    for (&a, &b) in x.iter().zip(y) {
        if b == ERASED {
            erased += 1;
        } else if a != b {
            return f64::NEG_INFINITY;
        }
    }
    count_log(erased, delta) + count_log(x.len() - erased, 1.0 - delta)
}

/// Entropy-rate targets for weak joint typicality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityRates {
    pub input: f64,
    pub output: f64,
    pub joint: f64,
}

impl TypicalityRates {
    pub fn new(params: &MarkovParams, delta: f64) -> Result<Self, ModelError> {
        let input = markov_model::conditional_entropy_rate(params, 0);
        let capacity = markov_model::matching_capacity(params, delta, 1e-12)?.capacity_bits;
        let h = binary_entropy(delta);
        Ok(TypicalityRates {
            input,
            output: h + capacity,
            joint: input + h,
        })
    }
}

fn within(log_prob: f64, n: usize, rate: f64, epsilon: f64) -> bool {
    (-log_prob / n as f64 - rate).abs() < epsilon
}

/// Matches each reduced row to the unique row of `db1` that is jointly
/// ε-typical with it (weak typicality against the stationary entropy rates).
pub fn match_typicality(
    db1: &Database,
    reduced: &ReducedDatabase,
    params: &MarkovParams,
    config: &MatcherConfig,
) -> Result<MatchResult, MatchError> {
    check_shapes(db1, reduced)?;
    if config.method != MatchMethod::Typicality {
        return Err(MatchError::InvalidEpsilon(config.epsilon));
    }
    config.validate()?;
    let n = db1.cols();
    let eps = config.epsilon;
    let delta = config.delta_for_typicality;
    let rates = TypicalityRates::new(params, delta)?;

    let input_lp: Vec<f64> = db1
        .iter_rows()
        .map(|x| markov_log_prob(params, x))
        .collect();
    let typical_x: Vec<bool> = input_lp
        .iter()
        .map(|&lp| within(lp, n, rates.input, eps))
        .collect();
    let retained = reduced.retained_columns();
    let channel_lp = count_log(n - retained.len(), delta) + count_log(retained.len(), 1.0 - delta);
    let index = ConsistencyIndex::build(db1, retained);

    let counts = (0..reduced.rows())
        .into_par_iter()
        .map(|l| {
            let y = reduced.row(l);
            if !within(output_log_prob(params, y, delta), n, rates.output, eps) {
                return (0, None);
            }
            let mut count = 0;
            let mut first = None;
            for i in index.candidates(y) {
                if typical_x[i] && within(input_lp[i] + channel_lp, n, rates.joint, eps) {
                    count += 1;
                    first.get_or_insert(i);
                }
            }
            (count, first)
        })
        .collect();
    Ok(MatchResult::from_counts(counts))
}

/// Dispatches on `config.method`.
pub fn match_rows(
    db1: &Database,
    reduced: &ReducedDatabase,
    params: &MarkovParams,
    config: &MatcherConfig,
) -> Result<MatchResult, MatchError> {
    match config.method {
        MatchMethod::Consistency => match_consistency(db1, reduced),
        MatchMethod::Typicality => match_typicality(db1, reduced, params, config),
    }
}

/// Fraction of original rows `i` whose image `Θ(i)` is not assigned back to `i`.
pub fn evaluate(result: &MatchResult, truth: &Permutation) -> Result<f64, MatchError> {
    let m = truth.len();
    if result.assignment.len() != m {
        return Err(MatchError::SizeMismatch {
            expected: m,
            actual: result.assignment.len(),
        });
    }
    if m == 0 {
        return Ok(0.0);
    }
    let wrong = (0..m)
        .filter(|&i| result.assignment[truth.apply(i)] != Some(i))
        .count();
    Ok(wrong as f64 / m as f64)
}

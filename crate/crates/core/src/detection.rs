//! Repetition-pattern recovery from collapsed column histograms.
//!
//! Both databases are collapsed to a binary alphabet (the marked symbol
//! becomes 1, everything else 2). The number of 2s in a column is a
//! fingerprint that survives any row shuffle, so when the fingerprints of
//! the first database are pairwise distinct, counting how often each one
//! appears in the second database recovers the repetition pattern exactly.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dbgen::Database;

/// Collapsed state for the marked symbol.
pub const MARKED: u8 = 1;
/// Collapsed state for every other symbol.
pub const UNMARKED: u8 = 2;

/// Rows above which histogram accumulation is split across threads.
const PARALLEL_ROWS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("marked symbol {symbol} outside alphabet 1..={alphabet_size}")]
    SymbolOutOfRange { symbol: u8, alphabet_size: u8 },
    #[error("histograms count {left} and {right} rows")]
    RowCountMismatch { left: usize, right: usize },
}

/// A database over `{1, 2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDatabase {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl BinaryDatabase {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }
}

/// Per-column count of unmarked entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramVector {
    counts: Vec<u64>,
    row_count: u64,
}

impl HistogramVector {
    pub fn new(counts: Vec<u64>, row_count: u64) -> Self {
        debug_assert!(counts.iter().all(|&c| c <= row_count));
        HistogramVector { counts, row_count }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row_count(&self) -> u64 {
        self.row_count
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// True when two columns share a count.
    pub fn has_duplicates(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.counts.len());
        !self.counts.iter().all(|c| seen.insert(*c))
    }
}

/// Why detection gave up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionFailure {
    /// Two columns of the first database share a histogram value.
    DuplicateHistogram,
    /// The second database's histograms are not a block-wise repetition of
    /// the first's (out of order, split blocks, or unmatched columns).
    InconsistentBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionStatus {
    Recovered,
    DetectionError(DetectionFailure),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectedPattern {
    s_hat: Vec<u32>,
    status: DetectionStatus,
}

impl DetectedPattern {
    /// A pattern known to be correct, e.g. for genie-aided experiments.
    pub fn recovered(s_hat: Vec<u32>) -> Self {
        DetectedPattern {
            s_hat,
            status: DetectionStatus::Recovered,
        }
    }

    fn failed(n: usize, why: DetectionFailure) -> Self {
        DetectedPattern {
            s_hat: vec![0; n],
            status: DetectionStatus::DetectionError(why),
        }
    }

    pub fn s_hat(&self) -> &[u32] {
        &self.s_hat
    }

    pub fn status(&self) -> DetectionStatus {
        self.status
    }

    pub fn is_recovered(&self) -> bool {
        self.status == DetectionStatus::Recovered
    }
}

/// Maps `marked_symbol` to 1 and all other symbols to 2.
pub fn collapse(
    db: &impl AsRef<Database>,
    marked_symbol: u8,
) -> Result<BinaryDatabase, DetectError> {
    let db = db.as_ref();
    if marked_symbol == 0 || marked_symbol > db.alphabet_size() {
        return Err(DetectError::SymbolOutOfRange {
            symbol: marked_symbol,
            alphabet_size: db.alphabet_size(),
        });
    }
    let entries = db
        .entries()
        .iter()
        .map(|&v| if v == marked_symbol { MARKED } else { UNMARKED })
        .collect();
    Ok(BinaryDatabase {
        rows: db.rows(),
        cols: db.cols(),
        entries,
    })
}

fn count_unmarked<'a>(rows: impl Iterator<Item = &'a [u8]>, cols: usize) -> Vec<u64> {
    let mut counts = vec![0u64; cols];
    for row in rows {
        for (c, &v) in counts.iter_mut().zip(row) {
            *c += u64::from(v == UNMARKED);
        }
    }
    counts
}

/// Number of 2s in each column.
pub fn column_histograms(collapsed: &BinaryDatabase) -> HistogramVector {
    let cols = collapsed.cols;
    let counts = if collapsed.rows >= PARALLEL_ROWS && cols > 0 {
        collapsed
            .entries
            .par_chunks(cols * 1024)
            .map(|block| count_unmarked(block.chunks(cols), cols))
            .reduce(
                || vec![0u64; cols],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    } else {
        count_unmarked(collapsed.entries.chunks(cols.max(1)), cols)
    };
    HistogramVector::new(counts, collapsed.rows as u64)
}

/// Collapse followed by histogram, without materialising the binary copy.
pub fn collapsed_histograms(
    db: &impl AsRef<Database>,
    marked_symbol: u8,
) -> Result<HistogramVector, DetectError> {
    let db = db.as_ref();
    if marked_symbol == 0 || marked_symbol > db.alphabet_size() {
        return Err(DetectError::SymbolOutOfRange {
            symbol: marked_symbol,
            alphabet_size: db.alphabet_size(),
        });
    }
    let mut counts = vec![0u64; db.cols()];
    for row in db.iter_rows() {
        for (c, &v) in counts.iter_mut().zip(row) {
            *c += u64::from(v != marked_symbol);
        }
    }
    Ok(HistogramVector::new(counts, db.rows() as u64))
}

struct Run {
    first: usize,
    count: usize,
    contiguous: bool,
}

/// Recovers the repetition pattern from the histograms of the original
/// (`h1`, length n) and repeated (`h2`, length K) databases.
pub fn detect_pattern(
    h1: &HistogramVector,
    h2: &HistogramVector,
) -> Result<DetectedPattern, DetectError> {
    if h1.row_count != h2.row_count {
        return Err(DetectError::RowCountMismatch {
            left: h1.row_count as usize,
            right: h2.row_count as usize,
        });
    }
    let n = h1.len();
    if h1.has_duplicates() {
        return Ok(DetectedPattern::failed(
            n,
            DetectionFailure::DuplicateHistogram,
        ));
    }

    let mut runs: HashMap<u64, Run> = HashMap::with_capacity(h2.len());
    for (k, &value) in h2.counts.iter().enumerate() {
        runs.entry(value)
            .and_modify(|run| {
                run.contiguous &= run.first + run.count == k;
                run.count += 1;
            })
            .or_insert(Run {
                first: k,
                count: 1,
                contiguous: true,
            });
    }

    let mut s_hat = Vec::with_capacity(n);
    let mut cursor = 0usize;
    for value in &h1.counts {
        match runs.get(value) {
            None => s_hat.push(0),
            Some(run) => {
                if !run.contiguous || run.first != cursor {
                    return Ok(DetectedPattern::failed(
                        n,
                        DetectionFailure::InconsistentBlocks,
                    ));
                }
                cursor += run.count;
                s_hat.push(run.count as u32);
            }
        }
    }
    if cursor != h2.len() {
        return Ok(DetectedPattern::failed(
            n,
            DetectionFailure::InconsistentBlocks,
        ));
    }
    Ok(DetectedPattern::recovered(s_hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: &[u64], rows: u64) -> HistogramVector {
        HistogramVector::new(counts.to_vec(), rows)
    }

    #[test]
    fn collapse_examples() {
        let db = Database::from_rows(3, &[vec![1, 3, 2, 1]]).unwrap();
        assert_eq!(collapse(&db, 1).unwrap().row(0), &[1, 2, 2, 1]);
        let bin = Database::from_rows(2, &[vec![1, 2, 2, 1]]).unwrap();
        assert_eq!(collapse(&bin, 1).unwrap().row(0), bin.row(0));
        let all = Database::from_rows(3, &[vec![2, 2], vec![2, 2]]).unwrap();
        let c = collapse(&all, 2).unwrap();
        assert_eq!((c.row(0), c.row(1)), (&[1u8, 1][..], &[1u8, 1][..]));
        assert!(matches!(
            collapse(&db, 4),
            Err(DetectError::SymbolOutOfRange { .. })
        ));
        assert!(collapse(&db, 0).is_err());
    }

    #[test]
    fn histogram_counts() {
        let db = Database::from_rows(
            2,
            &[vec![1, 1], vec![2, 1], vec![2, 1], vec![1, 1], vec![2, 1]],
        )
        .unwrap();
        let h = column_histograms(&collapse(&db, 1).unwrap());
        assert_eq!(h.counts(), &[3, 0]);
        assert_eq!(h.row_count(), 5);
        assert_eq!(collapsed_histograms(&db, 1).unwrap(), h);
    }

    #[test]
    fn detection_examples() {
        let p = detect_pattern(&hist(&[3, 5, 2], 9), &hist(&[3, 3, 2], 9)).unwrap();
        assert_eq!(p.s_hat(), &[2, 0, 1]);
        assert!(p.is_recovered());

        let p = detect_pattern(&hist(&[3, 3, 4], 9), &hist(&[3], 9)).unwrap();
        assert_eq!(
            p.status(),
            DetectionStatus::DetectionError(DetectionFailure::DuplicateHistogram)
        );

        let p = detect_pattern(&hist(&[4, 1], 9), &hist(&[], 9)).unwrap();
        assert_eq!(p.s_hat(), &[0, 0]);
        assert!(p.is_recovered());

        assert!(matches!(
            detect_pattern(&hist(&[1], 9), &hist(&[1], 8)),
            Err(DetectError::RowCountMismatch { .. })
        ));
    }

    #[test]
    fn inconsistent_blocks() {
        let bad = DetectionStatus::DetectionError(DetectionFailure::InconsistentBlocks);
        // split block
        let p = detect_pattern(&hist(&[3, 5], 9), &hist(&[3, 5, 3], 9)).unwrap();
        assert_eq!(p.status(), bad);
        // blocks out of order
        let p = detect_pattern(&hist(&[3, 5], 9), &hist(&[5, 3], 9)).unwrap();
        assert_eq!(p.status(), bad);
        // unmatched column in h2
        let p = detect_pattern(&hist(&[3, 5], 9), &hist(&[3, 7, 5], 9)).unwrap();
        assert_eq!(p.status(), bad);
        let p = detect_pattern(&hist(&[3, 5], 9), &hist(&[3, 5, 7], 9)).unwrap();
        assert_eq!(p.status(), bad);
    }
}

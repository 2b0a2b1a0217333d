//! Markov database generation and row permutations.
//!
//! Symbols are stored one byte each and are 1-based (`1..=alphabet_size`);
//! the value 0 is never a symbol and serves as the erasure marker elsewhere.
//! Row and permutation indices in the API are 0-based.

use std::io::{self, Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::markov_model::MarkovParams;
use crate::rng;

/// Default cap on the bytes a generated database may occupy (2 GiB).
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

const MAGIC: &[u8; 4] = b"DBM1";

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{rows} x {cols} database exceeds the memory budget of {budget} bytes")]
    DimensionOverflow {
        rows: usize,
        cols: usize,
        budget: usize,
    },
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("database must have at least one row")]
    Empty,
    #[error("entry {value} at ({row}, {col}) outside alphabet 1..={alphabet_size}")]
    SymbolOutOfRange {
        row: usize,
        col: usize,
        value: u8,
        alphabet_size: u8,
    },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("malformed database file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An `rows × cols` matrix over `{1, …, alphabet_size}`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    rows: usize,
    cols: usize,
    alphabet_size: u8,
    entries: Vec<u8>,
}

impl Database {
    /// Builds a database after checking shape and symbol range.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        alphabet_size: u8,
        entries: Vec<u8>,
    ) -> Result<Self, DbError> {
        if rows == 0 {
            return Err(DbError::Empty);
        }
        if entries.len() != rows * cols {
            return Err(DbError::SizeMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|&v| v == 0 || v > alphabet_size) {
            return Err(DbError::SymbolOutOfRange {
                row: pos / cols,
                col: pos % cols,
                value: entries[pos],
                alphabet_size,
            });
        }
        Ok(Database {
            rows,
            cols,
            alphabet_size,
            entries,
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(alphabet_size: u8, rows: &[Vec<u8>]) -> Result<Self, DbError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(DbError::SizeMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Self::from_entries(rows.len(), cols, alphabet_size, rows.concat())
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        alphabet_size: u8,
        entries: Vec<u8>,
    ) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        Database {
            rows,
            cols,
            alphabet_size,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alphabet_size(&self) -> u8 {
        self.alphabet_size
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[u8]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Writes the `DBM1` binary format: magic, `u32` rows, `u32` cols,
    /// `u8` alphabet size (integers little-endian), then row-major bytes.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), DbError> {
        let rows =
            u32::try_from(self.rows).map_err(|_| DbError::Format("rows exceed u32".into()))?;
        let cols =
            u32::try_from(self.cols).map_err(|_| DbError::Format("cols exceed u32".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        w.write_all(&[self.alphabet_size])?;
        w.write_all(&self.entries)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, DbError> {
        let mut header = [0u8; 13];
        r.read_exact(&mut header)
            .map_err(|e| DbError::Format(format!("truncated header: {e}")))?;
        if &header[..4] != MAGIC {
            return Err(DbError::Format("bad magic".into()));
        }
        let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let alphabet_size = header[12];
        let mut entries = vec![0u8; rows * cols];
        r.read_exact(&mut entries)
            .map_err(|e| DbError::Format(format!("truncated body: {e}")))?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(DbError::Format("trailing bytes after body".into()));
        }
        Self::from_entries(rows, cols, alphabet_size, entries)
    }

    /// Comma-separated symbols, one row per line. Meant for small instances.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for row in self.iter_rows() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// A bijection on `0..len`; `mapping[i]` is the output position of input row `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self, DbError> {
        let mut seen = vec![false; mapping.len()];
        for &v in &mapping {
            if v >= mapping.len() || std::mem::replace(&mut seen[v], true) {
                return Err(DbError::InvalidPermutation(format!(
                    "{v} is out of range or repeated"
                )));
            }
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(len: usize) -> Self {
        Permutation {
            mapping: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Image of `i`.
    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &j) in self.mapping.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { mapping: inv }
    }
}

fn check_budget(rows: usize, cols: usize, budget: usize) -> Result<(), DbError> {
    match rows.checked_mul(cols) {
        Some(bytes) if bytes <= budget => Ok(()),
        _ => Err(DbError::DimensionOverflow { rows, cols, budget }),
    }
}

/// Generates an `m × n` database with the default memory budget.
pub fn generate_database(
    params: &MarkovParams,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<Database, DbError> {
    generate_database_within(params, m, n, seed, DEFAULT_MEMORY_BUDGET)
}

/// Generates an `m × n` database. Row `i` draws from its own stream seeded
/// with `mix(seed, i)`, so output does not depend on the thread count.
pub fn generate_database_within(
    params: &MarkovParams,
    m: usize,
    n: usize,
    seed: u64,
    budget_bytes: usize,
) -> Result<Database, DbError> {
    if m == 0 || n == 0 {
        return Err(DbError::Empty);
    }
    check_budget(m, n, budget_bytes)?;

    let initial = WeightedIndex::new(params.stationary()).expect("validated distribution");
    let transition = params.transition();
    let steps: Vec<WeightedIndex<f64>> = (0..params.alphabet_size())
        .map(|i| WeightedIndex::new(transition.row(i)).expect("stochastic row"))
        .collect();

    let mut entries = vec![0u8; m * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let mut rng = rng::stream(rng::mix(seed, i as u64));
        let mut state = initial.sample(&mut rng);
        row[0] = state as u8 + 1;
        for slot in &mut row[1..] {
            state = steps[state].sample(&mut rng);
            *slot = state as u8 + 1;
        }
    });
    Ok(Database::from_parts_unchecked(
        m,
        n,
        params.alphabet_size() as u8,
        entries,
    ))
}

/// Uniform random permutation of `0..m` (Fisher–Yates).
pub fn sample_permutation(m: usize, seed: u64) -> Permutation {
    let mut mapping: Vec<usize> = (0..m).collect();
    mapping.shuffle(&mut rng::stream(seed));
    Permutation { mapping }
}

/// Moves input row `i` to output row `perm.apply(i)`.
pub fn apply_permutation(db: &Database, perm: &Permutation) -> Result<Database, DbError> {
    if perm.len() != db.rows() {
        return Err(DbError::SizeMismatch {
            expected: db.rows(),
            actual: perm.len(),
        });
    }
    let n = db.cols();
    let mut entries = vec![0u8; db.entries().len()];
    for (i, row) in db.iter_rows().enumerate() {
        let j = perm.apply(i);
        entries[j * n..(j + 1) * n].copy_from_slice(row);
    }
    Ok(Database::from_parts_unchecked(
        db.rows(),
        n,
        db.alphabet_size(),
        entries,
    ))
}

//! Simulation of database matching under random column repetitions.
//!
//! A database whose rows are i.i.d. Markov chains is shuffled row-wise and
//! passed through a column repetition channel that deletes or replicates
//! each column. The library recovers the repetition pattern from collapsed
//! column histograms, reduces the problem to an erasure channel, matches
//! rows, and compares the empirical error with the matching capacity.
//!
//! ```
//! use dbmatch::markov_model::{matching_capacity, MarkovParams};
//!
//! let params = MarkovParams::new(0.0, &[0.5, 0.5]).unwrap();
//! let c = matching_capacity(&params, 0.3, 1e-12).unwrap();
//! assert!((c.capacity_bits - 0.7).abs() < 1e-11);
//! ```

pub mod dbgen;
pub mod detection;
pub mod harness;
pub mod markov_model;
pub mod matching;
pub mod repetition;
pub mod rng;

pub use dbgen::{apply_permutation, generate_database, sample_permutation, Database, Permutation};
pub use detection::{
    collapse, column_histograms, detect_pattern, DetectedPattern, HistogramVector,
};
pub use markov_model::{
    conditional_entropy_rate, iid_capacity, matching_capacity, transition_power, validate_params,
    CapacityResult, MarkovParams, TransitionMatrix,
};
pub use matching::{
    evaluate, match_consistency, match_typicality, reduce, MatchResult, MatcherConfig,
    ReducedDatabase, ERASED,
};
pub use repetition::{
    apply_repetitions, sample_pattern, RepeatedDatabase, RepetitionDistribution, RepetitionPattern,
};

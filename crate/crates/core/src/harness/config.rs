//! Experiment configuration file.
//!
//! ```json
//! {
//!   "markov": { "gamma": 0.5, "u": [0.5, 0.5] },
//!   "repetition": { "probs": [0.25, 0.5, 0.25] },
//!   "n": 16,
//!   "growth_rates": [0.5, 0.75],
//!   "trials": 200,
//!   "master_seed": 7,
//!   "matcher": { "method": "consistency" },
//!   "marked_symbol": 1
//! }
//! ```
//!
//! `m_list` may replace `growth_rates`; `repetition` may be a list of
//! distributions, each adding its own sweep cells.

use std::path::Path;

use serde::Deserialize;

use super::HarnessError;
use crate::dbgen::DEFAULT_MEMORY_BUDGET;
use crate::markov_model::{validate_params, MarkovParams};
use crate::matching::{MatchMethod, MatcherConfig};
use crate::repetition::RepetitionDistribution;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    markov: RawMarkov,
    repetition: OneOrMany<RawRepetition>,
    n: usize,
    #[serde(default)]
    growth_rates: Option<Vec<f64>>,
    #[serde(default)]
    m_list: Option<Vec<usize>>,
    trials: usize,
    master_seed: u64,
    #[serde(default)]
    matcher: Option<RawMatcher>,
    #[serde(default)]
    marked_symbol: Option<u8>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarkov {
    gamma: f64,
    u: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRepetition {
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatcher {
    method: MatchMethod,
    #[serde(default)]
    epsilon: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

/// Row count of a sweep cell and the growth rate it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCount {
    pub m: usize,
    pub requested_rate: Option<f64>,
}

impl RowCount {
    /// `m = round(2^{nR})`.
    pub fn from_rate(n: usize, rate: f64) -> Self {
        RowCount {
            m: (n as f64 * rate).exp2().round() as usize,
            requested_rate: Some(rate),
        }
    }

    pub fn explicit(m: usize) -> Self {
        RowCount {
            m,
            requested_rate: None,
        }
    }

    /// `log₂(m) / n`.
    pub fn realized_rate(&self, n: usize) -> f64 {
        (self.m as f64).log2() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub markov: MarkovParams,
    pub repetitions: Vec<RepetitionDistribution>,
    pub n: usize,
    pub sizes: Vec<RowCount>,
    pub trials: usize,
    pub master_seed: u64,
    /// Method and ε; the typicality δ is filled per cell from `p_S(0)`.
    pub matcher: MatcherConfig,
    pub marked_symbol: u8,
    pub memory_budget: usize,
}

/// One sweep cell: a repetition distribution and a row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub repetition: RepetitionDistribution,
    pub rows: RowCount,
}

impl Cell {
    pub fn delta(&self) -> f64 {
        self.repetition.delta()
    }
}

fn invalid(field: impl Into<String>, message: impl ToString) -> HarnessError {
    HarnessError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, HarnessError> {
        let markov = validate_params(raw.markov.gamma, &raw.markov.u).map_err(|e| {
            let field = match e {
                crate::markov_model::ModelError::GammaOutOfRange { .. } => "markov.gamma",
                _ => "markov.u",
            };
            invalid(field, e)
        })?;

        let raw_reps = match raw.repetition {
            OneOrMany::One(r) => vec![r],
            OneOrMany::Many(rs) => rs,
        };
        if raw_reps.is_empty() {
            return Err(invalid(
                "repetition",
                "at least one distribution is required",
            ));
        }
        let single = raw_reps.len() == 1;
        let repetitions = raw_reps
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                RepetitionDistribution::new(r.probs).map_err(|e| {
                    let field = if single {
                        "repetition.probs".to_string()
                    } else {
                        format!("repetition[{k}].probs")
                    };
                    invalid(field, e)
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        if raw.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if raw.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }

        let sizes = match (raw.growth_rates, raw.m_list) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "growth_rates",
                    "give either growth_rates or m_list, not both",
                ))
            }
            (None, None) => {
                return Err(invalid(
                    "growth_rates",
                    "one of growth_rates or m_list is required",
                ))
            }
            (Some(rates), None) => {
                if rates.is_empty() {
                    return Err(invalid("growth_rates", "must not be empty"));
                }
                rates
                    .iter()
                    .enumerate()
                    .map(|(k, &r)| {
                        if !(r.is_finite() && r >= 0.0) {
                            return Err(invalid(
                                format!("growth_rates[{k}]"),
                                "must be finite and non-negative",
                            ));
                        }
                        Ok(RowCount::from_rate(raw.n, r))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            (None, Some(ms)) => {
                if ms.is_empty() {
                    return Err(invalid("m_list", "must not be empty"));
                }
                ms.into_iter().map(RowCount::explicit).collect()
            }
        };
        let field_of = |k: usize, rows: &RowCount| {
            if rows.requested_rate.is_some() {
                format!("growth_rates[{k}]")
            } else {
                format!("m_list[{k}]")
            }
        };
        for (k, rows) in sizes.iter().enumerate() {
            if rows.m == 0 {
                return Err(invalid(field_of(k, rows), "gives m = 0 rows"));
            }
            if rows.m > u32::MAX as usize {
                return Err(invalid(
                    field_of(k, rows),
                    format!("m = {} exceeds 2^32 - 1", rows.m),
                ));
            }
            if rows.m.saturating_mul(raw.n) > DEFAULT_MEMORY_BUDGET {
                return Err(invalid(
                    field_of(k, rows),
                    format!("{} x {} database exceeds the memory budget", rows.m, raw.n),
                ));
            }
        }

        let matcher = match raw.matcher {
            None => MatcherConfig::consistency(),
            Some(RawMatcher {
                method: MatchMethod::Consistency,
                ..
            }) => MatcherConfig::consistency(),
            Some(RawMatcher {
                method: MatchMethod::Typicality,
                epsilon,
            }) => {
                let eps =
                    epsilon.ok_or_else(|| invalid("matcher.epsilon", "required for typicality"))?;
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(invalid("matcher.epsilon", "must be positive"));
                }
                MatcherConfig::typicality(eps, 0.0)
            }
        };

        let marked_symbol = raw.marked_symbol.unwrap_or(1);
        if marked_symbol == 0 || marked_symbol as usize > markov.alphabet_size() {
            return Err(invalid(
                "marked_symbol",
                format!("must lie in 1..={}", markov.alphabet_size()),
            ));
        }

        Ok(ExperimentConfig {
            markov,
            repetitions,
            n: raw.n,
            sizes,
            trials: raw.trials,
            master_seed: raw.master_seed,
            matcher,
            marked_symbol,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        })
    }

    /// Sweep cells, repetition-major.
    pub fn cells(&self) -> Vec<Cell> {
        self.repetitions
            .iter()
            .flat_map(|rep| self.sizes.iter().map(move |rows| (rep, rows)))
            .enumerate()
            .map(|(index, (rep, rows))| Cell {
                index,
                repetition: rep.clone(),
                rows: *rows,
            })
            .collect()
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

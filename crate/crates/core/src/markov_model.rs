//! Closed-form numerics for the structured Markov source.
//!
//! Rows of a database follow a stationary first-order Markov chain whose
//! transition matrix has the form `P = γI + (1−γ)U`, where every row of `U`
//! is the stationary distribution `u`. Powers of `P` keep the same shape,
//! `P^k = γ^k I + (1−γ^k) U`, which makes every quantity here closed form:
//! the k-step conditional entropies `H(X₀ | X₋ₖ)` and the matching capacity
//!
//! ```text
//! C = (1−δ)² Σ_{r≥0} δ^r H(X₀ | X₋ᵣ₋₁)
//! ```
//!
//! All entropies are in bits and `0·log 0 = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `Σ u = 1` before renormalisation.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

/// Largest alphabet the byte-per-symbol storage supports (symbol 0 is reserved).
pub const MAX_ALPHABET: usize = 255;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("gamma {gamma} outside the open interval ({lower}, 1)")]
    GammaOutOfRange { gamma: f64, lower: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("deletion probability {0} outside [0, 1]")]
    InvalidDelta(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("transition power must be at least 1")]
    ZeroPower,
}

/// `-p log₂ p` with the convention `0 log 0 = 0`.
#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

/// Shannon entropy of a probability vector, in bits.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().copied().map(plogp).sum()
}

/// Normalises a strictly positive vector of length at least two.
pub(crate) fn normalize_distribution(p: &[f64]) -> Result<Vec<f64>, ModelError> {
    if p.len() < 2 {
        return Err(ModelError::InvalidDistribution(format!(
            "need at least 2 entries, got {}",
            p.len()
        )));
    }
    if p.len() > MAX_ALPHABET {
        return Err(ModelError::InvalidDistribution(format!(
            "alphabet of {} symbols exceeds the supported maximum {MAX_ALPHABET}",
            p.len()
        )));
    }
    if let Some((j, &v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(ModelError::InvalidDistribution(format!(
            "entry {j} is {v}; all entries must be strictly positive"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(ModelError::InvalidDistribution(format!(
            "entries sum to {total}, expected 1"
        )));
    }
    Ok(p.iter().map(|v| v / total).collect())
}

/// Parameters of the structured Markov row source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MarkovParams {
    gamma: f64,
    u: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    gamma: f64,
    u: Vec<f64>,
}

impl TryFrom<RawParams> for MarkovParams {
    type Error = ModelError;
    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        validate_params(raw.gamma, &raw.u)
    }
}

impl From<MarkovParams> for RawParams {
    fn from(p: MarkovParams) -> Self {
        RawParams {
            gamma: p.gamma,
            u: p.u,
        }
    }
}

/// Lower end of the admissible γ interval, `−min_j u_j / (1 − u_j)`.
pub fn gamma_lower_bound(u: &[f64]) -> f64 {
    -u.iter()
        .map(|&uj| uj / (1.0 - uj))
        .fold(f64::INFINITY, f64::min)
}

/// Validates `(γ, u)` and returns normalised parameters.
pub fn validate_params(gamma: f64, u: &[f64]) -> Result<MarkovParams, ModelError> {
    let u = normalize_distribution(u)?;
    let lower = gamma_lower_bound(&u);
    if !(gamma.is_finite() && gamma > lower && gamma < 1.0) {
        return Err(ModelError::GammaOutOfRange { gamma, lower });
    }
    Ok(MarkovParams { gamma, u })
}

impl MarkovParams {
    pub fn new(gamma: f64, u: &[f64]) -> Result<Self, ModelError> {
        validate_params(gamma, u)
    }

    /// Uniform stationary distribution over `alphabet_size` symbols.
    pub fn uniform(gamma: f64, alphabet_size: usize) -> Result<Self, ModelError> {
        let u = vec![1.0 / alphabet_size as f64; alphabet_size];
        validate_params(gamma, &u)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Stationary distribution (also the distribution of the first column).
    pub fn stationary(&self) -> &[f64] {
        &self.u
    }

    pub fn alphabet_size(&self) -> usize {
        self.u.len()
    }

    /// `P` itself.
    pub fn transition(&self) -> TransitionMatrix {
        transition_power(self, 1).expect("power 1 is valid")
    }

    /// Diagonal and off-diagonal factor of `P^k`: entry `(i, j)` equals
    /// `g·[i = j] + (1 − g)·u_j` with `g = γ^k`.
    #[inline]
    pub(crate) fn power_weight(&self, power: u32) -> f64 {
        self.gamma.powi(power as i32)
    }

    /// Entry `(from, to)` of `P^power`, symbols 0-based.
    #[inline]
    pub fn power_entry(&self, power: u32, from: usize, to: usize) -> f64 {
        let g = self.power_weight(power);
        let stay = if from == to { g } else { 0.0 };
        stay + (1.0 - g) * self.u[to]
    }
}

/// A power `P^order` stored densely, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    order: u32,
    dim: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.dim..(from + 1) * self.dim]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// `P^power = γ^power I + (1 − γ^power) U`, evaluated without multiplication.
pub fn transition_power(params: &MarkovParams, power: u32) -> Result<TransitionMatrix, ModelError> {
    if power == 0 {
        return Err(ModelError::ZeroPower);
    }
    let dim = params.alphabet_size();
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(params.power_entry(power, i, j));
        }
    }
    Ok(TransitionMatrix {
        order: power,
        dim,
        entries,
    })
}

/// `H(X₀ | X₋gap₋₁) = Σ_i u_i H(row i of P^{gap+1})`, in bits.
pub fn conditional_entropy_rate(params: &MarkovParams, gap: u32) -> f64 {
    let power = gap.saturating_add(1);
    let u = params.stationary();
    let g = params.power_weight(power);
    u.iter()
        .enumerate()
        .map(|(i, &ui)| {
            let row: f64 = u
                .iter()
                .enumerate()
                .map(|(j, &uj)| {
                    let stay = if i == j { g } else { 0.0 };
                    plogp(stay + (1.0 - g) * uj)
                })
                .sum();
            ui * row
        })
        .sum()
}

/// Capacity value together with truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    /// Truncated series value, bits per column.
    pub capacity_bits: f64,
    /// Number of series terms summed (`R* + 1`).
    pub terms_used: u32,
    /// Certified bound on the neglected series tail.
    pub tail_bound_bits: f64,
    /// Independent evaluation through the rearranged closed form.
    pub closed_form_bits: f64,
}

impl CapacityResult {
    fn exact(value: f64) -> Self {
        CapacityResult {
            capacity_bits: value,
            terms_used: 1,
            tail_bound_bits: 0.0,
            closed_form_bits: value,
        }
    }

    /// Whether the series and the closed form agree within the certified tail.
    pub fn is_consistent(&self) -> bool {
        (self.capacity_bits - self.closed_form_bits).abs() <= self.tail_bound_bits + 1e-9
    }
}

fn check_delta(delta: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&delta) {
        Ok(())
    } else {
        Err(ModelError::InvalidDelta(delta))
    }
}

/// Hard cap on series length; only reached for δ within ~1e-6 of 1.
const MAX_TERMS: u32 = 50_000_000;

/// Matching capacity in bits per column for deletion probability `delta`.
///
/// The series is truncated at the first `R*` with
/// `(1−δ) δ^{R*+1} log₂|𝔛| ≤ tolerance`. `closed_form_bits` is computed
/// from the rearranged expression
///
/// ```text
/// C = (1−δ)(1−γ)/(1−γδ) · [H(u) + Σ_i u_i² log u_i]
///     − (1−δ)² Σ_r δ^r [ Σ_i u_i a_r,i log a_r,i
///                       + (1−γ^{r+1}) log(1−γ^{r+1}) (1 − Σ_i u_i²) ]
/// ```
///
/// with `a_r,i = γ^{r+1} + (1−γ^{r+1}) u_i`, whose residual series is summed
/// to a much tighter tolerance than the main one.
pub fn matching_capacity(
    params: &MarkovParams,
    delta: f64,
    tolerance: f64,
) -> Result<CapacityResult, ModelError> {
    check_delta(delta)?;
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(ModelError::InvalidTolerance(tolerance));
    }
    if delta == 1.0 {
        return Ok(CapacityResult::exact(0.0));
    }
    if delta == 0.0 {
        return Ok(CapacityResult::exact(conditional_entropy_rate(params, 0)));
    }

    let log_alphabet = (params.alphabet_size() as f64).log2();
    let keep = 1.0 - delta;
    let mut sum = 0.0;
    let mut weight = 1.0; // δ^r
    let mut r = 0u32;
    let tail = loop {
        sum += weight * conditional_entropy_rate(params, r);
        weight *= delta;
        let tail = keep * weight * log_alphabet;
        if tail <= tolerance || r + 1 >= MAX_TERMS {
            break tail;
        }
        r += 1;
    };

    let closed = closed_form_capacity(params, delta, tolerance.min(1e-14));
    Ok(CapacityResult {
        capacity_bits: keep * keep * sum,
        terms_used: r + 1,
        tail_bound_bits: tail,
        closed_form_bits: closed,
    })
}

fn closed_form_capacity(params: &MarkovParams, delta: f64, tolerance: f64) -> f64 {
    let u = params.stationary();
    let gamma = params.gamma();
    let keep = 1.0 - delta;
    let collision: f64 = u.iter().map(|ui| ui * ui).sum();
    // -Σ u_i² log u_i
    let weighted_self: f64 = u.iter().map(|&ui| ui * plogp(ui)).sum();
    let lead = keep * (1.0 - gamma) / (1.0 - gamma * delta) * (shannon_entropy(u) - weighted_self);

    // Each residual term is bounded by 2·log₂(e)/e in magnitude.
    let term_bound = 2.0 * std::f64::consts::LOG2_E / std::f64::consts::E;
    let mut residual = 0.0;
    let mut weight = 1.0;
    let mut g = gamma;
    for _ in 0..MAX_TERMS {
        let diag: f64 = u.iter().map(|&ui| ui * plogp(g + (1.0 - g) * ui)).sum();
        let off = plogp(1.0 - g) * (1.0 - collision);
        residual += weight * (diag + off);
        weight *= delta;
        g *= gamma;
        if keep * weight * term_bound <= tolerance {
            break;
        }
    }
    lead + keep * keep * residual
}

/// Capacity when columns are i.i.d. with distribution `p_x`: `(1−δ) H(p_x)`.
pub fn iid_capacity(p_x: &[f64], delta: f64) -> Result<f64, ModelError> {
    check_delta(delta)?;
    let p = normalize_distribution(p_x)?;
    Ok((1.0 - delta) * shannon_entropy(&p))
}

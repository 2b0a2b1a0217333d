//! Independent oracles shared by the integration tests. Nothing here calls
//! the code paths it is used to check.
#![allow(dead_code)]

use dbmatch::{Database, MarkovParams, MatchResult, ReducedDatabase, ERASED};

/// Dense `P` built entry by entry from `(γ, u)`.
pub fn dense_p(params: &MarkovParams) -> Vec<Vec<f64>> {
    let u = params.stationary();
    let g = params.gamma();
    (0..u.len())
        .map(|i| {
            (0..u.len())
                .map(|j| {
                    if i == j {
                        g + (1.0 - g) * u[j]
                    } else {
                        (1.0 - g) * u[j]
                    }
                })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// `P^power` by repeated multiplication.
pub fn brute_power(params: &MarkovParams, power: u32) -> Vec<Vec<f64>> {
    let p = dense_p(params);
    let mut acc = p.clone();
    for _ in 1..power {
        acc = mat_mul(&acc, &p);
    }
    acc
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Capacity series evaluated with explicitly multiplied matrix powers,
/// `terms` terms.
pub fn brute_capacity(params: &MarkovParams, delta: f64, terms: u32) -> f64 {
    let u = params.stationary();
    let p = dense_p(params);
    let mut power = p.clone();
    let mut sum = 0.0;
    let mut weight = 1.0;
    for _ in 0..terms {
        let rate: f64 = (0..u.len())
            .map(|i| u[i] * power[i].iter().copied().map(h).sum::<f64>())
            .sum();
        sum += weight * rate;
        weight *= delta;
        power = mat_mul(&power, &p);
    }
    (1.0 - delta) * (1.0 - delta) * sum
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().copied().map(h).sum()
}

/// All-pairs consistency matching.
pub fn brute_force_match(db1: &Database, reduced: &ReducedDatabase) -> MatchResult {
    let mut collisions = 0;
    let mut misses = 0;
    let assignment = (0..reduced.rows())
        .map(|l| {
            let y = reduced.row(l);
            let hits: Vec<usize> = (0..db1.rows())
                .filter(|&i| {
                    db1.row(i)
                        .iter()
                        .zip(y)
                        .all(|(&a, &b)| b == ERASED || a == b)
                })
                .collect();
            match hits.len() {
                0 => {
                    misses += 1;
                    None
                }
                1 => Some(hits[0]),
                _ => {
                    collisions += 1;
                    None
                }
            }
        })
        .collect();
    MatchResult {
        assignment,
        collisions,
        misses,
    }
}

/// Total-variation distance between two distributions on the same support.
pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

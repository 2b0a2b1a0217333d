mod common;

use std::collections::HashMap;

use dbmatch::dbgen::{apply_permutation, generate_database, sample_permutation, Permutation};
use dbmatch::MarkovParams;
use proptest::prelude::*;

const M: usize = 100_000;

fn skewed() -> MarkovParams {
    MarkovParams::new(0.4, &[0.2, 0.3, 0.5]).unwrap()
}

#[test]
fn column_marginals_are_stationary() {
    let p = skewed();
    let db = generate_database(&p, M, 6, 2024).unwrap();
    for j in 0..db.cols() {
        let mut freq = [0f64; 3];
        for i in 0..db.rows() {
            freq[db.get(i, j) as usize - 1] += 1.0 / M as f64;
        }
        let d = common::tv(&freq, p.stationary());
        assert!(d < 0.01, "column {j}: tv {d}");
    }
}

#[test]
fn single_column_is_stationary() {
    let p = skewed();
    let db = generate_database(&p, M, 1, 5).unwrap();
    let mut freq = [0f64; 3];
    for &v in db.entries() {
        freq[v as usize - 1] += 1.0 / M as f64;
    }
    assert!(common::tv(&freq, p.stationary()) < 0.01);
}

#[test]
fn transitions_follow_p() {
    let p = skewed();
    let dense = common::dense_p(&p);
    let db = generate_database(&p, M, 4, 99).unwrap();
    let mut counts = vec![vec![0f64; 3]; 3];
    for row in db.iter_rows() {
        for w in row.windows(2) {
            counts[w[0] as usize - 1][w[1] as usize - 1] += 1.0;
        }
    }
    for (i, row) in counts.iter().enumerate() {
        let total: f64 = row.iter().sum();
        let emp: Vec<f64> = row.iter().map(|c| c / total).collect();
        let d = common::tv(&emp, &dense[i]);
        assert!(d < 0.01, "row {i}: tv {d}");
    }
}

#[test]
fn negative_gamma_transitions() {
    let p = MarkovParams::new(-0.2, &[0.4, 0.6]).unwrap();
    let dense = common::dense_p(&p);
    let db = generate_database(&p, M, 2, 17).unwrap();
    let from_one: Vec<&[u8]> = db.iter_rows().filter(|r| r[0] == 1).collect();
    let stay = from_one.iter().filter(|r| r[1] == 1).count() as f64 / from_one.len() as f64;
    assert!(
        (stay - dense[0][0]).abs() < 0.01,
        "{stay} vs {}",
        dense[0][0]
    );
}

#[test]
fn row_blocks_are_exchangeable() {
    // Distribution of the per-row count of symbol 1 in the first and second
    // halves of the database must agree.
    let p = MarkovParams::new(0.5, &[0.5, 0.5]).unwrap();
    let n = 8;
    let db = generate_database(&p, M, n, 31).unwrap();
    let hist = |rows: std::ops::Range<usize>| {
        let mut h = vec![0f64; n + 1];
        let len = rows.len() as f64;
        for i in rows {
            h[db.row(i).iter().filter(|&&v| v == 1).count()] += 1.0 / len;
        }
        h
    };
    let d = common::tv(&hist(0..M / 2), &hist(M / 2..M));
    assert!(d < 0.02, "tv {d}");
}

#[test]
fn permutation_is_uniform() {
    let samples = 60_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for s in 0..samples {
        *counts
            .entry(sample_permutation(3, s).as_slice().to_vec())
            .or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    for (perm, c) in counts {
        let f = c as f64 / samples as f64;
        assert!((f - 1.0 / 6.0).abs() < 0.01, "{perm:?}: {f}");
    }
}

proptest! {
    #[test]
    fn permutation_roundtrip(m in 1usize..200, seed in any::<u64>(), n in 1usize..6) {
        let p = MarkovParams::new(0.2, &[0.3, 0.7]).unwrap();
        let db = generate_database(&p, m, n, seed).unwrap();
        let theta = sample_permutation(m, seed ^ 1);
        prop_assert!(Permutation::new(theta.as_slice().to_vec()).is_ok());
        let shuffled = apply_permutation(&db, &theta).unwrap();
        for i in 0..m {
            prop_assert_eq!(shuffled.row(theta.apply(i)), db.row(i));
        }
        prop_assert_eq!(apply_permutation(&shuffled, &theta.inverse()).unwrap(), db);
    }
}

// Compare the typicality matcher with the consistency matcher on a
// correlated source.

use dbmatch::{
    apply_permutation, evaluate, generate_database, match_consistency, match_typicality,
    sample_permutation, MarkovParams, MatcherConfig, ReducedDatabase,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n, delta) = (64, 48, 0.25);
    let params = MarkovParams::new(0.3, &[0.5, 0.5])?;
    let db = generate_database(&params, m, n, 20)?;
    let theta = sample_permutation(m, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let erased: Vec<bool> = (0..n).map(|_| rng.gen_bool(delta)).collect();
    let reduced = ReducedDatabase::erase_columns(&apply_permutation(&db, &theta)?, &erased)?;

    let consistency = match_consistency(&db, &reduced)?;
    println!(
        "consistency: row error rate {:.4}",
        evaluate(&consistency, &theta)?
    );
    for epsilon in [0.05, 0.2, 1.0] {
        let result = match_typicality(
            &db,
            &reduced,
            &params,
            &MatcherConfig::typicality(epsilon, delta),
        )?;
        println!(
            "typicality eps={epsilon}: row error rate {:.4} ({} collisions, {} misses)",
            evaluate(&result, &theta)?,
            result.collisions,
            result.misses
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

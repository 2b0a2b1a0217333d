// Match rows of a shuffled database with erased columns back to the
// original by exact agreement on the retained columns.

use dbmatch::{
    apply_permutation, evaluate, generate_database, match_consistency, sample_permutation,
    MarkovParams, ReducedDatabase,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n) = (1000, 24);
    let params = MarkovParams::new(0.0, &[0.25, 0.25, 0.25, 0.25])?;
    let db = generate_database(&params, m, n, 10)?;
    let theta = sample_permutation(m, 11);
    let erased: Vec<bool> = (0..n).map(|j| j % 4 == 0).collect();
    let reduced = ReducedDatabase::erase_columns(&apply_permutation(&db, &theta)?, &erased)?;

    let result = match_consistency(&db, &reduced)?;
    println!(
        "{} of {n} columns retained: {} collisions, {} misses, row error rate {:.4}",
        reduced.retained_columns().len(),
        result.collisions,
        result.misses,
        evaluate(&result, &theta)?
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

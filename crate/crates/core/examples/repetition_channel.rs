// Pass a database through the column repetition channel: each column is
// deleted, kept, or replicated according to a sampled pattern.

use dbmatch::{
    apply_repetitions, generate_database, sample_pattern, MarkovParams, RepetitionDistribution,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = MarkovParams::new(0.0, &[0.25, 0.25, 0.25, 0.25])?;
    let db = generate_database(&params, 4, 8, 1)?;
    let dist = RepetitionDistribution::new(vec![0.25, 0.5, 0.25])?;
    let pattern = sample_pattern(&dist, db.cols(), 2);
    println!("deletion probability {}", dist.delta());
    println!(
        "pattern {:?}, deleted columns {:?}",
        pattern.counts(),
        pattern.deleted_columns()
    );

    let repeated = apply_repetitions(&db, &pattern)?;
    println!("{} columns in, {} columns out", db.cols(), repeated.cols());
    for (before, after) in db.iter_rows().zip(repeated.as_database().iter_rows()) {
        println!("{before:?} -> {after:?}");
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

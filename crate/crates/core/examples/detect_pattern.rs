// Recover the repetition pattern from column histograms of the collapsed
// databases, without knowing the row shuffle.

use dbmatch::detection::collapsed_histograms;
use dbmatch::{
    apply_permutation, apply_repetitions, detect_pattern, generate_database, sample_pattern,
    sample_permutation, MarkovParams, RepetitionDistribution,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (m, n) = (20_000, 10);
    let params = MarkovParams::new(0.5, &[0.5, 0.5])?;
    let db = generate_database(&params, m, n, 3)?;
    let theta = sample_permutation(m, 4);
    let pattern = sample_pattern(&RepetitionDistribution::new(vec![0.2, 0.5, 0.3])?, n, 5);
    let observed = apply_repetitions(&apply_permutation(&db, &theta)?, &pattern)?;

    let h1 = collapsed_histograms(&db, 1)?;
    let h2 = collapsed_histograms(&observed, 1)?;
    println!("original column counts {:?}", h1.counts());
    println!("observed column counts {:?}", h2.counts());

    let detected = detect_pattern(&h1, &h2)?;
    println!("status {:?}", detected.status());
    if detected.is_recovered() {
        println!(
            "recovered {:?}, true {:?}",
            detected.s_hat(),
            pattern.counts()
        );
        assert_eq!(detected.s_hat(), pattern.counts());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

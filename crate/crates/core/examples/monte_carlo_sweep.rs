// Run a small Monte Carlo sweep over database growth rates and print the
// summary table. Small databases fail at pattern detection; rates above
// capacity fail at matching.

use dbmatch::harness::{run_experiment, write_summary_csv, ExperimentConfig, RunOptions};

const CONFIG: &str = r#"{
    "markov": {"gamma": 0.0, "u": [0.25, 0.25, 0.25, 0.25]},
    "repetition": {"probs": [0.1, 0.9]},
    "n": 8,
    "growth_rates": [0.5, 1.0, 1.5, 2.0],
    "trials": 20,
    "master_seed": 2024,
    "matcher": {"method": "consistency"}
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_json(CONFIG)?;
    let output = run_experiment(&config, RunOptions::default())?;
    write_summary_csv(&output.summary, std::io::stdout().lock())?;
    let duplicates = output
        .trials
        .iter()
        .filter(|t| t.detection_duplicate)
        .count();
    println!(
        "{duplicates} of {} trials hit a histogram duplicate",
        output.trials.len()
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

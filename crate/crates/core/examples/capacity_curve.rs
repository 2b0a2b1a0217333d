// Matching capacity as a function of the deletion probability, for a
// memoryless source and a strongly correlated one.

use dbmatch::harness::{capacity_table, write_capacity_csv};
use dbmatch::MarkovParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let deltas = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    for gamma in [0.0, 0.8] {
        let params = MarkovParams::new(gamma, &[0.25, 0.25, 0.25, 0.25])?;
        println!("gamma = {gamma}");
        let rows = capacity_table(&params, &deltas, 1e-12)?;
        write_capacity_csv(&rows, std::io::stdout().lock())?;
        assert!(rows.iter().all(|r| r.consistent));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

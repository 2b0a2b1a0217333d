// Estimate how often two columns of a database share the same collapsed
// histogram, which is what makes pattern detection fail.

use dbmatch::harness::{collision_probe, write_probe_csv};
use dbmatch::MarkovParams;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = MarkovParams::new(0.5, &[0.5, 0.5])?;
    let rows = collision_probe(&params, &[4, 8, 16], &[100, 1_000, 10_000], 50, 9, 1)?;
    write_probe_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

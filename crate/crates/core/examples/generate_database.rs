// Generate a Markov database, shuffle its rows, and round-trip it through
// the binary file format.

use dbmatch::{apply_permutation, generate_database, sample_permutation, Database, MarkovParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = MarkovParams::new(0.5, &[0.5, 0.5])?;
    let db = generate_database(&params, 6, 10, 42)?;
    println!("original:");
    db.write_csv(std::io::stdout().lock())?;

    let theta = sample_permutation(db.rows(), 7);
    let shuffled = apply_permutation(&db, &theta)?;
    println!("row i moved to {:?}", theta.as_slice());
    for i in 0..db.rows() {
        assert_eq!(shuffled.row(theta.apply(i)), db.row(i));
    }

    let mut bytes = Vec::new();
    shuffled.write_binary(&mut bytes)?;
    let restored = Database::read_binary(bytes.as_slice())?;
    assert_eq!(restored, shuffled);
    println!("binary encoding: {} bytes", bytes.len());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dbmatch::harness::{
    capacity_table, collision_probe, load_config, run_experiment, write_capacity_csv,
    write_outputs, write_probe_csv, HarnessError, RunOptions,
};
use dbmatch::markov_model::validate_params;

#[derive(Parser)]
#[command(name = "dbmatch", about = "Database matching under column repetitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the matching capacity for a list of deletion probabilities.
    Capacity {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        delta_list: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Run a Monte Carlo experiment described by a JSON config.
    Simulate(SimulateArgs),
    /// Same as `simulate`; intended for configs with several cells.
    Sweep(SimulateArgs),
    /// Estimate the probability of duplicate column histograms.
    CollisionProbe {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        m_list: Vec<usize>,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        marked_symbol: u8,
    },
}

#[derive(Args)]
struct SourceArgs {
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Stationary distribution, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    u: Vec<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Write zero wall times so trials.jsonl is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn config_error(field: &str, e: impl ToString) -> HarnessError {
    HarnessError::Validation {
        field: field.into(),
        message: e.to_string(),
    }
}

fn io_error(e: io::Error) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let config = load_config(&args.config)?;
    let output = run_experiment(
        &config,
        RunOptions {
            workers: args.workers,
            record_timing: !args.no_timing,
        },
    )?;
    write_outputs(&output, &args.out_dir)?;
    eprintln!(
        "wrote {} cells, {} trials to {}",
        output.summary.len(),
        output.trials.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let stdout = io::stdout();
    match cli.command {
        Command::Capacity {
            source,
            delta_list,
            tol,
        } => {
            let params =
                validate_params(source.gamma, &source.u).map_err(|e| config_error("markov", e))?;
            if tol.is_nan() || tol <= 0.0 {
                return Err(config_error("tol", "must be positive"));
            }
            let rows = capacity_table(&params, &delta_list, tol)?;
            write_capacity_csv(&rows, stdout.lock()).map_err(io_error)
        }
        Command::Simulate(args) | Command::Sweep(args) => simulate(args),
        Command::CollisionProbe {
            source,
            n_list,
            m_list,
            trials,
            seed,
            marked_symbol,
        } => {
            let params =
                validate_params(source.gamma, &source.u).map_err(|e| config_error("markov", e))?;
            if marked_symbol == 0 || marked_symbol as usize > params.alphabet_size() {
                return Err(config_error("marked_symbol", "outside the alphabet"));
            }
            let rows = collision_probe(&params, &n_list, &m_list, trials, seed, marked_symbol)?;
            let mut out = stdout.lock();
            write_probe_csv(&rows, &mut out).map_err(io_error)?;
            out.flush().map_err(io_error)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

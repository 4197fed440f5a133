//! `densilab`: equivalence decisions, density sweeps and lattice
//! classification from the command line.
//!
//! Exit status 0 means success (for `equiv`: equivalent), 1 means the maps
//! are not equivalent, 2 means an error, reported on stderr.

mod commands;
mod config;
mod input;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DensityArgs, Failure, Outcome};
use config::{Config, GlobalArgs};

#[derive(Parser, Debug)]
#[command(name = "densilab", version, about = "Density families of self-adjoint expansive maps")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum, expansiveness, positivity and lattice condition of a symmetric matrix
    Analyze {
        /// Inline ("2,0;0,4") or a JSON file
        matrix: String,
    },
    /// Decide whether two maps induce the same dense sets (exit 0 yes, 1 no)
    Equiv { first: String, second: String },
    /// Monte Carlo density quotients over a range of j
    Density(DensityArgs),
    /// Similarity class, roots of identity and dyadic membership
    Classify {
        #[arg(required_unless_present = "scan")]
        matrix: Option<String>,
        /// Classify every expanding matrix with entries in [-N, N] instead
        #[arg(long, value_name = "N", conflicts_with = "matrix")]
        scan: Option<i64>,
    },
    /// Membership in the equivalence class of 2I
    Dyadic { matrix: String },
}

fn run(cli: &Cli, out: &mut Vec<u8>) -> Result<Outcome, Failure> {
    let cfg = Config::resolve(&cli.global)?;
    match &cli.command {
        Command::Analyze { matrix } => commands::analyze(out, &cfg, matrix),
        Command::Equiv { first, second } => commands::equiv(out, &cfg, first, second),
        Command::Density(args) => commands::density(out, &cfg, args),
        Command::Classify { scan: Some(n), .. } => commands::classify_scan(out, &cfg, *n),
        Command::Classify { matrix: Some(m), .. } => commands::classify(out, &cfg, m),
        Command::Classify { .. } => unreachable!("clap requires a matrix or --scan"),
        Command::Dyadic { matrix } => commands::dyadic(out, &cfg, matrix),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // buffer stdout so that failing commands print nothing there
    let mut buf = Vec::new();
    match run(&cli, &mut buf) {
        Ok(outcome) => {
            if let Err(e) = std::io::stdout().lock().write_all(&buf) {
                eprintln!("error: IoError: {e}");
                return ExitCode::from(2);
            }
            match outcome {
                Outcome::Success => ExitCode::SUCCESS,
                Outcome::Negative => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use projop::error::Error;
use projop::experiment::{check_net_report, describe_basis, error_record, load_config, run_experiment};

/// Experiments with projection-based operator approximation.
#[derive(Parser)]
#[command(name = "projop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check pairwise separation of a centers archive.
    CheckNet { centers: PathBuf, epsilon: f64 },
    /// Summarize a basis export.
    DescribeBasis { basis: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", error_record(e));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => load_config(&config).and_then(|cfg| run_experiment(&cfg)).map(|out| {
            for f in out.files {
                println!("{}", f.display());
            }
            true
        }),
        Command::CheckNet { centers, epsilon } => read(&centers).and_then(|t| check_net_report(&t, epsilon)).map(|(report, ok)| {
            print!("{report}");
            ok
        }),
        Command::DescribeBasis { basis } => read(&basis).and_then(|t| describe_basis(&t)).map(|s| {
            print!("{s}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => fail(&e),
    }
}

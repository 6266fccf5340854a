use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixfrac::{init_threads, run, CliError, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "mixfrac", version, about = "Spectra and maximum-principle studies for mixed-order fractional operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every task of a JSON config.
    Run {
        /// Path to the JSON config.
        config: PathBuf,
        /// Proceed even if the measure violates the structural hypotheses.
        #[arg(long)]
        force: bool,
        /// Output directory (overrides `output.dir`).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, force, out } = cli.command;
    let result = init_threads().and_then(|()| run(&RunOptions { config, force, out }));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.diagnostic());
    ExitCode::from(e.exit_code() as u8)
}

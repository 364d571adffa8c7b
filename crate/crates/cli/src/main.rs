use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idprior::Overrides;

#[derive(Parser)]
#[command(name = "idprior", version, about = "Seeded experiments with infinitely divisible and compressible priors")]
struct Cli {
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $IDPRIOR_OUTPUT_ROOT or ./runs, then <experiment>-seed<seed>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single-threaded deterministic execution.
    #[arg(long, global = true)]
    reference: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Check a config and print it with defaults resolved.
    Validate { config: PathBuf },
    /// Write ground truth, clean forward output and noisy data.
    MakeSynthetic { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides {
        seed: cli.seed,
        out: cli.out,
        reference: cli.reference,
    };
    let result = match &cli.command {
        Command::Run { config } => idprior::run(config, &ov).map(|d| format!("wrote {}", d.display())),
        Command::MakeSynthetic { config } => idprior::make_synthetic(config, &ov).map(|d| format!("wrote {}", d.display())),
        Command::Validate { config } => idprior::validate(config, &ov),
    };
    match result {
        Ok(msg) => {
            // A closed pipe (e.g. `| head`) is not an error of the command.
            let _ = writeln!(std::io::stdout(), "{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

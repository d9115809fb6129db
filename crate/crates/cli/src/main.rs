use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "stackopt",
    about = "Leader-follower optimization experiments from revealed responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all (scenario x seed) cells of a config, writing traces and a summary.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (overrides config and STACKOPT_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accept results produced under desk-scale caps.
        #[arg(long)]
        non_certified_ok: bool,
    },
    /// Replay the follower or equilibrium oracle at a fixed leader action.
    Verify {
        /// Path to the experiment config.
        config: PathBuf,
        /// Leader action as a comma-separated list, e.g. --action 2.0 or --action 0.25,0.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        action: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            jobs,
            out,
            non_certified_ok,
        } => stackopt_cli::run(
            &config,
            &stackopt_cli::RunOptions {
                jobs,
                out_dir: out,
                non_certified_ok,
            },
        ),
        Command::Verify { config, action } => stackopt_cli::verify(&config, &action),
    };
    ExitCode::from(code as u8)
}

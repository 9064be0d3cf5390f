use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use whlab_cli::{configure_threads, run, Command, Invocation, EXIT_CONFIG};

/// Exact Wiener-Hopf factorization and half-line reconstruction experiments
/// for lattice random walks.
#[derive(Parser)]
#[command(name = "whlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let code = run(&Invocation {
        command: args.command,
        config: args.config,
        out: args.out,
        seed: args.seed,
    });
    ExitCode::from(code as u8)
}

use std::process::ExitCode;

use clap::Parser;
use haegan_cli::{run_command, Command, CommonArgs};

/// Hyperbolic GAN and concatenation experiments.
#[derive(Debug, Parser)]
#[command(name = "haegan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command, &cli.common) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

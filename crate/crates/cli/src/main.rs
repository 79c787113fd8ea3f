use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ndsym_cli::{run, Command};

/// Time-sliced fundamental solutions, Markov kernels and their consistency checks.
#[derive(Parser)]
#[command(name = "ndsym", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args.command, &args.config, args.out.as_deref()) {
        Ok((summary, dir)) => {
            let verdict = if summary.passed { "passed" } else { "FAILED" };
            println!("{} {verdict}; artifacts in {}", summary.command, dir.display());
            if let Some(err) = summary.metrics.get("error") {
                eprintln!("error: {err}");
            }
            ExitCode::from(if summary.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("ndsym: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

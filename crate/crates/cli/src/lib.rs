//! Batch front-end of `ndsym`: one JSON configuration in, CSV/JSON artifacts and an exit code out.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use ndsym::io::{write_json, write_text, Summary};

pub use config::{Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] ndsym::Error),
    #[error("cannot write artifacts: {0}")]
    Output(String),
}

impl CliError {
    /// Process exit code: 2 for configuration and output problems, 1 for failed runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            _ => 2,
        }
    }
}

/// Default output directory when neither `--out` nor `output_dir` is given.
pub const DEFAULT_OUT: &str = "ndsym-out";

/// Runs `command` on the configuration at `config_path` and writes artifacts plus `summary.json`.
///
/// Configuration problems return an error before anything is written. Numerical failures
/// during the run produce a summary with `passed = false` and the error message in `metrics`.
pub fn run(command: Command, config_path: &Path, out: Option<&Path>) -> Result<(Summary, PathBuf), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let config = RunConfig::parse(&text)?;
    let dir = out.map(Path::to_path_buf).or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let threads = config.numeric.threads;
    let prepared = config.prepare(command)?;
    if let Some(n) = threads {
        // Fails only if a pool already exists, in which case that pool is used.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let outcome = match commands::execute(command, &prepared) {
        Ok(o) => o,
        Err(CliError::Run(e)) => commands::Outcome {
            passed: false,
            metrics: serde_json::json!({ "error": e.to_string() }),
            seed: prepared.config.numeric.seed,
            artifacts: vec![],
        },
        Err(e) => return Err(e),
    };
    let out_err = |e: ndsym::Error| CliError::Output(e.to_string());
    for (name, body) in &outcome.artifacts {
        write_text(&dir, name, body).map_err(out_err)?;
    }
    let summary = Summary::new(command.name(), outcome.passed, outcome.metrics, outcome.seed);
    let mut summary = summary;
    summary.versions.insert("ndsym-cli".into(), env!("CARGO_PKG_VERSION").into());
    write_json(&dir, "summary.json", &summary).map_err(out_err)?;
    Ok((summary, dir))
}

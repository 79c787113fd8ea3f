//! The JSON run configuration.

use std::path::PathBuf;

use clap::ValueEnum;
use ndsym::pdo::{GridFunction, TorusGrid};
use ndsym::symbols::{SymbolSpec, TimeDependentSymbol};
use ndsym::timeslice::Partition;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckSymbol,
    Evolve,
    Compose,
    Kernel,
    Sample,
    VerifyDecomposition,
    VerifyFamily,
    Convergence,
    CrossValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckSymbol => "check-symbol",
            Command::Evolve => "evolve",
            Command::Compose => "compose",
            Command::Kernel => "kernel",
            Command::Sample => "sample",
            Command::VerifyDecomposition => "verify-decomposition",
            Command::VerifyFamily => "verify-family",
            Command::Convergence => "convergence",
            Command::CrossValidate => "cross-validate",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub s: f64,
    pub t: f64,
    /// Intermediate time for two-interval commands (`compose`, `verify-family`); midpoint by default.
    #[serde(default)]
    pub mid: Option<f64>,
    /// Number of uniform slices.
    #[serde(default)]
    pub slices: Option<usize>,
    /// Explicit partition points from `s` to `t`.
    #[serde(default)]
    pub partition: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    pub n_quad: usize,
    pub eps: f64,
    /// Mollifier width of the kernel cell indicators, in cells.
    pub smoothing: f64,
    #[serde(rename = "J")]
    pub depth: usize,
    pub n_paths: usize,
    pub seed: Option<u64>,
    pub tol: f64,
    pub threads: Option<usize>,
    pub record_timing: bool,
    pub k_max: usize,
    pub n_samples: usize,
    pub sample_radius: f64,
    pub n_theta: usize,
    pub n_time_nodes: usize,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            n_quad: 4,
            eps: 0.0,
            smoothing: 0.0,
            depth: 2,
            n_paths: 10_000,
            seed: None,
            tol: 1e-8,
            threads: None,
            record_timing: false,
            k_max: 1024,
            n_samples: 10_000,
            sample_radius: 50.0,
            n_theta: 8,
            n_time_nodes: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum InitialConfig {
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Gaussian { sigma: 0.5, center: vec![] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    pub symbol: SymbolSpec,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

/// A configuration that passed validation, with its library objects built.
pub struct Prepared {
    pub config: RunConfig,
    pub grid: TorusGrid,
    pub symbol: TimeDependentSymbol,
    pub partition: Partition,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed configuration: {e}")))
    }

    /// Checks the invariants and builds the grid, symbol and partition.
    pub fn prepare(self, command: Command) -> Result<Prepared, CliError> {
        let bad = |m: String| CliError::Config(m);
        if let Some(c) = self.command {
            if c != command {
                return Err(bad(format!("configuration is for `{}`, not `{}`", c.name(), command.name())));
            }
        }
        if !self.grid.n.is_power_of_two() {
            return Err(bad(format!("grid n = {} is not a power of two", self.grid.n)));
        }
        let grid = TorusGrid::new(self.grid.d, self.grid.n, self.grid.l).map_err(|e| bad(e.to_string()))?;
        let symbol = self.symbol.build(grid.d).map_err(|e| bad(e.to_string()))?;
        let (s, t) = (self.time.s, self.time.t);
        if !(s < t) {
            return Err(bad(format!("time interval needs s < t, got s = {s}, t = {t}")));
        }
        if s < 0.0 || t > symbol.horizon * (1.0 + 1e-12) {
            return Err(bad(format!("[{s}, {t}] leaves the symbol horizon [0, {}]", symbol.horizon)));
        }
        if let Some(m) = self.time.mid {
            if !(s <= m && m <= t) {
                return Err(bad(format!("mid = {m} is outside [{s}, {t}]")));
            }
        }
        let partition = match (&self.time.partition, self.time.slices) {
            (Some(_), Some(_)) => return Err(bad("give either `time.slices` or `time.partition`, not both".into())),
            (Some(p), None) => {
                let pi = Partition::new(p.clone()).map_err(|e| bad(e.to_string()))?;
                if (pi.start() - s).abs() > 1e-12 || (pi.end() - t).abs() > 1e-12 {
                    return Err(bad("time.partition must run from time.s to time.t".into()));
                }
                pi
            }
            (None, k) => Partition::slices(s, t, k.unwrap_or(1).max(1)).map_err(|e| bad(e.to_string()))?,
        };
        let nu = &self.numeric;
        if nu.n_quad == 0 || !(nu.eps >= 0.0) || !(nu.smoothing >= 0.0) || !(nu.tol > 0.0) || nu.n_paths == 0 || nu.n_samples == 0 {
            return Err(bad("numeric knobs: n_quad, n_paths, n_samples and tol must be positive; eps and smoothing non-negative".into()));
        }
        if nu.depth > 3 {
            return Err(bad(format!("J = {} exceeds the supported depth 3", nu.depth)));
        }
        let InitialConfig::Gaussian { sigma, center } = &self.initial;
        if !(*sigma > 0.0) || center.len() > grid.d {
            return Err(bad("initial Gaussian needs sigma > 0 and at most d center coordinates".into()));
        }
        Ok(Prepared { config: self, grid, symbol, partition })
    }
}

impl Prepared {
    pub fn initial(&self) -> GridFunction {
        let InitialConfig::Gaussian { sigma, center } = &self.config.initial;
        let mut c = center.clone();
        c.resize(self.grid.d, 0.0);
        GridFunction::gaussian(self.grid, *sigma, &c)
    }

    pub fn mid(&self) -> f64 {
        let t = &self.config.time;
        t.mid.unwrap_or(0.5 * (t.s + t.t))
    }

    pub fn x0(&self) -> Vec<f64> {
        let InitialConfig::Gaussian { center, .. } = &self.config.initial;
        let mut c = center.clone();
        c.resize(self.grid.d, 0.0);
        c
    }
}

//! CSV and JSON artifacts.
//!
//! Grid-valued CSV files start with one `#` row carrying the grid (or kernel) parameters as
//! `key=value` pairs, followed by a column-name row and the data. Floats are written in Rust's
//! shortest round-trip form, so identical values give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::markov::{PathEnsemble, TransitionKernel};
use crate::parametrix::CrossValidationReport;
use crate::pdo::{DiscreteSymbol, GridFunction, TorusGrid};
use crate::timeslice::TraceRow;
use crate::{Error, Result};

fn grid_header(grid: &TorusGrid) -> String {
    format!("# d={},n={},L={}\n", grid.d, grid.n, grid.l)
}

fn parse_header(line: &str) -> Result<BTreeMap<String, String>> {
    let body = line.strip_prefix('#').ok_or_else(|| Error::Parse(format!("expected a `#` header row, got {line:?}")))?;
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("malformed header entry {kv:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    map.get(key)
        .ok_or_else(|| Error::Parse(format!("header lacks `{key}`")))?
        .parse()
        .map_err(|_| Error::Parse(format!("header `{key}` is not a valid number")))
}

fn parse_grid(line: &str) -> Result<TorusGrid> {
    let h = parse_header(line)?;
    TorusGrid::new(field(&h, "d")?, field(&h, "n")?, field(&h, "L")?)
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: cannot parse {s:?}")))
}

/// Data rows after the parameter and column-name rows, split on commas.
fn data_rows(text: &str, columns: &str) -> Result<(String, Vec<(usize, Vec<String>)>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let (_, cols) = lines.next().ok_or_else(|| Error::Parse("missing column row".into()))?;
    if cols.trim() != columns {
        return Err(Error::Parse(format!("expected columns `{columns}`, got `{cols}`")));
    }
    let width = columns.split(',').count();
    let rows = lines
        .map(|(i, l)| {
            let parts: Vec<String> = l.split(',').map(str::to_string).collect();
            if parts.len() != width {
                return Err(Error::Parse(format!("line {}: expected {width} fields", i + 1)));
            }
            Ok((i + 1, parts))
        })
        .collect::<Result<_>>()?;
    Ok((header.to_string(), rows))
}

pub fn grid_function_to_csv(u: &GridFunction) -> String {
    let mut out = grid_header(&u.grid);
    out.push_str("index,re,im\n");
    for (i, v) in u.values.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", v.re, v.im);
    }
    out
}

pub fn grid_function_from_csv(text: &str) -> Result<GridFunction> {
    let (header, rows) = data_rows(text, "index,re,im")?;
    let grid = parse_grid(&header)?;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.size()];
    let mut seen = vec![false; grid.size()];
    for (line, r) in rows {
        let i: usize = num(&r[0], line)?;
        if i >= values.len() || seen[i] {
            return Err(Error::Parse(format!("line {line}: index {i} out of range or repeated")));
        }
        values[i] = Complex64::new(num(&r[1], line)?, num(&r[2], line)?);
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Parse("grid function has missing nodes".into()));
    }
    GridFunction::new(grid, values)
}

/// Every `(ix, ik)` entry; multipliers are written out in full.
pub fn symbol_to_csv(sym: &DiscreteSymbol) -> String {
    let n = sym.grid.size();
    let mut out = grid_header(&sym.grid);
    out.push_str("ix,ik,re,im\n");
    for ix in 0..n {
        for ik in 0..n {
            let v = sym.get(ix, ik);
            let _ = writeln!(out, "{ix},{ik},{},{}", v.re, v.im);
        }
    }
    out
}

/// Reads a symbol table; it is stored as a multiplier when every row is identical.
pub fn symbol_from_csv(text: &str) -> Result<DiscreteSymbol> {
    let (header, rows) = data_rows(text, "ix,ik,re,im")?;
    let grid = parse_grid(&header)?;
    let n = grid.size();
    if rows.len() != n * n {
        return Err(Error::Parse(format!("{} symbol rows for a {n}×{n} table", rows.len())));
    }
    let mut table = vec![Complex64::new(0.0, 0.0); n * n];
    for (line, r) in rows {
        let (ix, ik): (usize, usize) = (num(&r[0], line)?, num(&r[1], line)?);
        if ix >= n || ik >= n {
            return Err(Error::Parse(format!("line {line}: index out of range")));
        }
        table[ix * n + ik] = Complex64::new(num(&r[2], line)?, num(&r[3], line)?);
    }
    let first = &table[..n];
    if table.chunks(n).all(|row| row == first) {
        return DiscreteSymbol::multiplier(grid, first.to_vec());
    }
    DiscreteSymbol::full(grid, table)
}

pub fn kernel_to_csv(k: &TransitionKernel) -> String {
    let mut out = format!("# s={},t={},n={},L={}\n", k.s, k.t, k.grid.n, k.grid.l);
    out.push_str("i,j,p\n");
    for i in 0..k.size() {
        for j in 0..k.size() {
            let _ = writeln!(out, "{i},{j},{}", k.p[(i, j)]);
        }
    }
    out
}

/// Kernel on a one-dimensional grid.
pub fn kernel_from_csv(text: &str) -> Result<TransitionKernel> {
    let (header, rows) = data_rows(text, "i,j,p")?;
    let h = parse_header(&header)?;
    let grid = TorusGrid::new(1, field(&h, "n")?, field(&h, "L")?)?;
    let n = grid.size();
    let mut p = nalgebra::DMatrix::zeros(n, n);
    for (line, r) in rows {
        let (i, j): (usize, usize) = (num(&r[0], line)?, num(&r[1], line)?);
        if i >= n || j >= n {
            return Err(Error::Parse(format!("line {line}: index out of range")));
        }
        p[(i, j)] = num(&r[2], line)?;
    }
    Ok(TransitionKernel { grid, s: field(&h, "s")?, t: field(&h, "t")?, p, max_imag: 0.0 })
}

/// `path,step,time,x` (with `x2` for two-dimensional grids).
pub fn ensemble_to_csv(e: &PathEnsemble) -> String {
    let d = e.positions.first().and_then(|p| p.first()).map_or(1, |x| x.len());
    let mut out = String::from(if d == 1 { "path,step,time,x\n" } else { "path,step,time,x,x2\n" });
    for (path, steps) in e.positions.iter().enumerate() {
        for (step, x) in steps.iter().enumerate() {
            let _ = write!(out, "{path},{step},{}", e.times[step]);
            for v in x {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Seed sidecar of an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub n_paths: usize,
    pub rng: String,
    pub clamped_mass: f64,
}

impl SeedRecord {
    pub fn of(e: &PathEnsemble) -> Self {
        Self {
            seed: e.seed,
            n_paths: e.positions.len(),
            rng: "ChaCha8, stream = path index".into(),
            clamped_mass: e.clamped_mass,
        }
    }
}

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("k,mesh,delta,runtime_ms\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.k, r.mesh, r.delta, r.runtime_ms);
    }
    out
}

pub fn cross_validation_to_csv(report: &CrossValidationReport) -> String {
    let mut out = String::from("J,k,distance,residual_ts,residual_levi\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.depth, r.k, r.distance, r.residual_ts, r.residual_levi);
    }
    out
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub passed: bool,
    pub metrics: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
}

impl Summary {
    pub fn new(command: &str, passed: bool, metrics: serde_json::Value, seed: Option<u64>) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("ndsym".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert("summary_schema".to_string(), "1".to_string());
        Self { command: command.into(), passed, metrics, seed, versions }
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::symbols::{Modulation, Psi, TimeDependentSymbol};

    #[test]
    fn grid_function_round_trip_is_exact() {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        let u = GridFunction::from_fn(g, |x| Complex64::new(x[0].sin() / 3.0, x[0] * 1e-7));
        let text = grid_function_to_csv(&u);
        assert!(text.starts_with("# d=1,n=16,L=6.283185307179586\nindex,re,im\n"));
        assert_eq!(grid_function_from_csv(&text).unwrap(), u);
    }

    #[test]
    fn symbol_round_trip_is_exact() {
        let g = TorusGrid::new(1, 8, 2.0 * PI).unwrap();
        let a = TimeDependentSymbol::separable(Modulation { amp: 0.5, freq: 1.0 }, Psi::power(1.5), 1).unwrap();
        let p = crate::pdo::frozen_exp_symbol(&a, 0.0, 0.1, &g, 4).unwrap();
        assert_eq!(symbol_from_csv(&symbol_to_csv(&p)).unwrap(), p);
        let m = DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(xi[0], 0.0));
        assert_eq!(symbol_from_csv(&symbol_to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn kernel_round_trip_is_exact() {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        let a = TimeDependentSymbol::multiplier(Psi::quadratic(), 1).unwrap();
        let k = crate::markov::transition_kernel(&a, 0.0, 0.1, 2, &g, 0.0, 4).unwrap();
        let back = kernel_from_csv(&kernel_to_csv(&k)).unwrap();
        assert_eq!(back.p, k.p);
        assert_eq!((back.s, back.t), (0.0, 0.1));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(grid_function_from_csv("").is_err());
        assert!(grid_function_from_csv("# d=1,n=4,L=1\nindex,re,im\n0,1,0\n").is_err());
        assert!(grid_function_from_csv("# d=1,n=4\nindex,re,im\n").is_err());
        assert!(grid_function_from_csv("# d=1,n=2,L=1\nidx,re,im\n0,1,0\n1,1,0\n").is_err());
        assert!(symbol_from_csv("# d=1,n=2,L=1\nix,ik,re,im\n0,0,x,0\n").is_err());
    }
}

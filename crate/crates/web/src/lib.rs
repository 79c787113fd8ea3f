//! wasm-bindgen bindings for the static page in `www/`.
//!
//! The model is always `(1 + amp·sin(2πx/L))·|ξ|^α` on a 1-d torus; `α = 2, amp = 0` is the heat
//! equation. Each binding forwards to a plain function so the numerics are testable natively.

use std::f64::consts::PI;

use ndsym::markov::{sample_paths, transition_kernel};
use ndsym::pdo::{GridFunction, TorusGrid};
use ndsym::symbols::{Modulation, Psi, TimeDependentSymbol};
use ndsym::timeslice::{evolve_time_sliced, Partition};
use wasm_bindgen::prelude::*;

const N_QUAD: usize = 4;

fn symbol(alpha: f64, amp: f64, l: f64) -> ndsym::Result<TimeDependentSymbol> {
    let psi = if alpha == 2.0 { Psi::quadratic() } else { Psi::power(alpha) };
    if amp == 0.0 {
        TimeDependentSymbol::multiplier(psi, 1)
    } else {
        TimeDependentSymbol::separable(Modulation { amp, freq: 2.0 * PI / l }, psi, 1)
    }
}

/// Real part of `u(t)` from a Gaussian of width `sigma` at the origin; `t = 0` gives the initial data.
pub fn evolve_values(alpha: f64, amp: f64, n: usize, l: f64, t: f64, slices: usize, sigma: f64) -> ndsym::Result<Vec<f64>> {
    let grid = TorusGrid::new(1, n, l)?;
    let u0 = GridFunction::gaussian(grid, sigma, &[0.0]);
    if t == 0.0 {
        return Ok(u0.values.iter().map(|v| v.re).collect());
    }
    let u = evolve_time_sliced(&symbol(alpha, amp, l)?, &Partition::slices(0.0, t, slices)?, &u0, N_QUAD)?;
    Ok(u.values.iter().map(|v| v.re).collect())
}

/// Row of the transition kernel `P_{0,t}` for the cell nearest `x0`.
pub fn kernel_row(alpha: f64, amp: f64, n: usize, l: f64, t: f64, slices: usize, x0: f64) -> ndsym::Result<Vec<f64>> {
    let grid = TorusGrid::new(1, n, l)?;
    let k = transition_kernel(&symbol(alpha, amp, l)?, 0.0, t, slices, &grid, 0.0, N_QUAD)?;
    let i = grid.nearest_index(&[x0]);
    Ok(k.p.row(i).iter().copied().collect())
}

/// Positions of `n_paths` chains over `steps` equal steps of `[0, t]`, flattened path-major.
pub fn path_positions(alpha: f64, amp: f64, n: usize, l: f64, t: f64, steps: usize, n_paths: usize, seed: u64) -> ndsym::Result<Vec<f64>> {
    let grid = TorusGrid::new(1, n, l)?;
    let a = symbol(alpha, amp, l)?;
    let times = Partition::slices(0.0, t, steps)?.times().to_vec();
    let kernels = times
        .windows(2)
        .map(|w| transition_kernel(&a, w[0], w[1], 1, &grid, 0.0, N_QUAD))
        .collect::<ndsym::Result<Vec<_>>>()?;
    let ens = sample_paths(&kernels, &[0.0], n_paths, seed)?;
    Ok(ens.positions.iter().flatten().map(|x| x[0]).collect())
}

fn js(e: ndsym::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn nodes(n: usize, l: f64) -> Result<Vec<f64>, JsError> {
    Ok(TorusGrid::new(1, n, l).map_err(js)?.nodes())
}

#[wasm_bindgen]
pub fn evolve(alpha: f64, amp: f64, n: usize, l: f64, t: f64, slices: usize, sigma: f64) -> Result<Vec<f64>, JsError> {
    evolve_values(alpha, amp, n, l, t, slices, sigma).map_err(js)
}

#[wasm_bindgen]
pub fn transition_row(alpha: f64, amp: f64, n: usize, l: f64, t: f64, slices: usize, x0: f64) -> Result<Vec<f64>, JsError> {
    kernel_row(alpha, amp, n, l, t, slices, x0).map_err(js)
}

#[wasm_bindgen]
pub fn sample(alpha: f64, amp: f64, n: usize, l: f64, t: f64, steps: usize, n_paths: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    path_positions(alpha, amp, n, l, t, steps, n_paths, seed as u64).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_evolution_matches_gaussian() {
        // σ² + 2t = 1 + 2·0.25, so the width becomes √1.5.
        let u = evolve_values(2.0, 0.0, 128, 20.0, 0.25, 4, 1.0).unwrap();
        let grid = TorusGrid::new(1, 128, 20.0).unwrap();
        let exact = GridFunction::gaussian(grid, 1.5f64.sqrt(), &[0.0]);
        let err = u.iter().zip(&exact.values).map(|(a, b)| (a - b.re).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn kernel_rows_are_probabilities() {
        let row = kernel_row(1.5, 0.5, 64, 2.0 * PI, 0.2, 4, 0.0).unwrap();
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(row.iter().all(|p| *p > -1e-4));
    }

    #[test]
    fn paths_are_reproducible() {
        let a = path_positions(2.0, 0.0, 64, 20.0, 0.5, 5, 20, 9).unwrap();
        assert_eq!(a.len(), 20 * 6);
        assert_eq!(a, path_positions(2.0, 0.0, 64, 20.0, 0.5, 5, 20, 9).unwrap());
    }
}

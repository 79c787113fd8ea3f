//! Grid Fourier transform `û_k = N^{−1} Σ_i u_i e^{−i x_i·ξ_k}` and its inverse
//! `u_i = Σ_k û_k e^{i x_i·ξ_k}`, so that the symbol `1` quantizes to the identity.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let (planner, cache) = &mut *p.borrow_mut();
        cache
            .entry((n, forward))
            .or_insert_with(|| if forward { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) })
            .clone()
    })
}

/// Apply a 1-d transform along every axis of a row-major `n^d` array.
fn transform_axes(grid: &TorusGrid, data: &mut [Complex64], forward: bool) {
    let n = grid.n;
    let fft = plan(n, forward);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.d {
        let stride = n.pow((grid.d - 1 - axis) as u32);
        let blocks = data.len() / n;
        for b in 0..blocks {
            let (outer, inner) = (b / stride, b % stride);
            let start = outer * stride * n + inner;
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
}

/// `(−1)^{k₁+…+k_d}` for the frequency multi-index of a shifted flat index.
fn sign(grid: &TorusGrid, idx: usize) -> f64 {
    let half = grid.n / 2;
    let s: usize = grid.unflatten(idx).iter().map(|&ik| (ik + half) % 2).sum();
    if s.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Position in FFT order of shifted frequency index `ik` (i.e. `k mod n`).
fn fft_pos(grid: &TorusGrid, idx: usize) -> usize {
    let half = grid.n / 2;
    grid.unflatten(idx).iter().fold(0, |acc, &ik| acc * grid.n + (ik + grid.n - half) % grid.n)
}

pub fn forward(grid: &TorusGrid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    transform_axes(grid, &mut buf, true);
    let scale = 1.0 / grid.size() as f64;
    (0..grid.size()).map(|idx| buf[fft_pos(grid, idx)] * (sign(grid, idx) * scale)).collect()
}

pub fn inverse(grid: &TorusGrid, hat: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.size()];
    for (idx, h) in hat.iter().enumerate() {
        buf[fft_pos(grid, idx)] = h * sign(grid, idx);
    }
    transform_axes(grid, &mut buf, false);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_forward(grid: &TorusGrid, u: &[Complex64]) -> Vec<Complex64> {
        (0..grid.size())
            .map(|k| {
                let xi = grid.freq_vec(k);
                let s: Complex64 = (0..grid.size())
                    .map(|i| {
                        let x = grid.point(i);
                        let ph: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
                        u[i] * Complex64::from_polar(1.0, -ph)
                    })
                    .sum();
                s / grid.size() as f64
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_and_inverts() {
        for grid in [TorusGrid::new(1, 16, 7.0).unwrap(), TorusGrid::new(2, 8, 5.0).unwrap()] {
            let u: Vec<Complex64> =
                (0..grid.size()).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
            let fast = forward(&grid, &u);
            let slow = direct_forward(&grid, &u);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
            let back = inverse(&grid, &fast);
            for (a, b) in back.iter().zip(&u) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}

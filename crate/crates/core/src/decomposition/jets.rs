//! Truncated ξ-jets of symbols sampled along the spatial lattice.

use num_complex::Complex64;

use crate::pdo::{fourier, TorusGrid};

/// `c[m][i] = ∂_ξ^m f(x_i, ξ)` for `m ≤ order`, at one fixed `ξ`.
#[derive(Clone, Debug)]
pub(crate) struct Jet {
    pub c: Vec<Vec<Complex64>>,
}

impl Jet {
    pub fn constant(n: usize, order: usize, v: Complex64) -> Self {
        let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; order + 1];
        c[0] = vec![v; n];
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Leibniz product truncated at the smaller order.
    pub fn mul(&self, other: &Jet) -> Jet {
        let order = self.order().min(other.order());
        let n = self.c[0].len();
        let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; order + 1];
        for (m, out) in c.iter_mut().enumerate() {
            for r in 0..=m {
                let b = binom(m, r);
                let (f, g) = (&self.c[r], &other.c[m - r]);
                for i in 0..n {
                    out[i] += b * f[i] * g[i];
                }
            }
        }
        Jet { c }
    }

    /// `∂_ξ` of the jet, one order lower.
    pub fn shift(&self) -> Jet {
        Jet { c: self.c[1..].to_vec() }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet { c: self.c[..=order.min(self.order())].to_vec() }
    }

    pub fn add_assign(&mut self, other: &Jet) {
        let order = self.order().min(other.order());
        self.c.truncate(order + 1);
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Spectral `D_x = −i∂_x` on every component.
    pub fn dx(&self, grid: &TorusGrid) -> Jet {
        Jet { c: self.c.iter().map(|v| spectral_dx(grid, v, 1)).collect() }
    }
}

fn binom(m: usize, r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, i| acc * (m + 1 - i) as f64 / i as f64)
}

/// `D_x^power v` through the lattice Fourier series.
pub(crate) fn spectral_dx(grid: &TorusGrid, v: &[Complex64], power: u32) -> Vec<Complex64> {
    let mut hat = fourier::forward(grid, v);
    for (k, h) in hat.iter_mut().enumerate() {
        *h *= grid.freq(k).powi(power as i32);
    }
    fourier::inverse(grid, &hat)
}

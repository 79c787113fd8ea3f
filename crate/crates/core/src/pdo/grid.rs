use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Periodic grid `x_i = −L/2 + iL/n` with frequency lattice `ξ_k = 2πk/L`, `k ∈ [−n/2, n/2)`.
///
/// Multi-dimensional arrays are stored row-major with axis 0 slowest, both in space and in
/// frequency. Frequency index `ik` stands for `k = ik − n/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        let g = Self { d, n, l };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 2 {
            return Err(Error::InvalidGrid(format!("d = {} (only 1 and 2 are supported)", self.d)));
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {} is not a power of two ≥ 2", self.n)));
        }
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidGrid(format!("L = {} must be positive", self.l)));
        }
        Ok(())
    }

    /// Total number of nodes `n^d`.
    pub fn size(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.d as i32)
    }

    /// One-dimensional node coordinate.
    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.l + i as f64 * self.dx()
    }

    /// One-dimensional frequency for shifted index `ik`.
    pub fn freq(&self, ik: usize) -> f64 {
        2.0 * PI * (ik as f64 - (self.n / 2) as f64) / self.l
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }

    /// Per-axis indices of a flat index.
    pub fn unflatten(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        let mut r = idx;
        for a in (0..self.d).rev() {
            out[a] = r % self.n;
            r /= self.n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx).into_iter().map(|i| self.node(i)).collect()
    }

    pub fn freq_vec(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx).into_iter().map(|k| self.freq(k)).collect()
    }

    /// Index of the node closest to `x` (per axis, periodically).
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        for &v in x.iter().take(self.d) {
            let i = ((v + 0.5 * self.l) / self.dx()).round().rem_euclid(self.n as f64) as usize % self.n;
            idx = idx * self.n + i;
        }
        idx
    }

    /// Map a coordinate back into `[−L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        (x + 0.5 * self.l).rem_euclid(self.l) - 0.5 * self.l
    }
}

/// Complex values on every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: TorusGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::GridMismatch(format!("{} values for a grid of size {}", values.len(), grid.size())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: TorusGrid, f: F) -> Self {
        let values = (0..grid.size()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { grid, values: vec![Complex64::new(c, 0.0); grid.size()] }
    }

    /// Normalized Gaussian density `Π (2πσ²)^{−1/2} exp(−(x−c)²/(2σ²))`.
    pub fn gaussian(grid: TorusGrid, sigma: f64, center: &[f64]) -> Self {
        let norm = (2.0 * PI * sigma * sigma).powf(-0.5 * grid.d as f64);
        Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().enumerate().map(|(a, v)| (v - center.get(a).copied().unwrap_or(0.0)).powi(2)).sum();
            Complex64::new(norm * (-0.5 * r2 / (sigma * sigma)).exp(), 0.0)
        })
    }

    /// Indicator of the single node `j` (a discrete delta of mass one cell).
    pub fn unit(grid: TorusGrid, j: usize) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.size()];
        values[j] = Complex64::new(1.0, 0.0);
        Self { grid, values }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `sup|self − other|`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// `‖self − other‖ / ‖other‖` in the grid `L²` norm.
    pub fn relative_l2_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm() / other.l2_norm())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }
}

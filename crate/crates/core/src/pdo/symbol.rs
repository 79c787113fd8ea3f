use num_complex::Complex64;

use super::grid::TorusGrid;
use crate::{Error, Result};

/// Symbol values on the lattice `{x_i} × {ξ_k}`.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolData {
    /// x-independent: one value per frequency.
    Multiplier(Vec<Complex64>),
    /// Row-major table, entry `ix·N + ik`.
    Full(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSymbol {
    pub grid: TorusGrid,
    pub data: SymbolData,
}

impl DiscreteSymbol {
    pub fn constant(grid: TorusGrid, c: Complex64) -> Self {
        Self { grid, data: SymbolData::Multiplier(vec![c; grid.size()]) }
    }

    pub fn one(grid: TorusGrid) -> Self {
        Self::constant(grid, Complex64::new(1.0, 0.0))
    }

    pub fn zero(grid: TorusGrid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn multiplier(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::GridMismatch(format!("{} multiplier values for {} frequencies", values.len(), grid.size())));
        }
        Ok(Self { grid, data: SymbolData::Multiplier(values) })
    }

    pub fn full(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        let n = grid.size();
        if values.len() != n * n {
            return Err(Error::GridMismatch(format!("{} symbol values for a {n}×{n} table", values.len())));
        }
        Ok(Self { grid, data: SymbolData::Full(values) })
    }

    pub fn multiplier_from_fn<F: Fn(&[f64]) -> Complex64>(grid: TorusGrid, f: F) -> Self {
        let v = (0..grid.size()).map(|k| f(&grid.freq_vec(k))).collect();
        Self { grid, data: SymbolData::Multiplier(v) }
    }

    pub fn from_fn<F: Fn(&[f64], &[f64]) -> Complex64 + Sync>(grid: TorusGrid, f: F) -> Self {
        let n = grid.size();
        let rows = crate::par::map_range(n, |ix| {
            let x = grid.point(ix);
            (0..n).map(|ik| f(&x, &grid.freq_vec(ik))).collect::<Vec<_>>()
        });
        Self { grid, data: SymbolData::Full(rows.concat()) }
    }

    pub fn is_multiplier(&self) -> bool {
        matches!(self.data, SymbolData::Multiplier(_))
    }

    #[inline]
    pub fn get(&self, ix: usize, ik: usize) -> Complex64 {
        match &self.data {
            SymbolData::Multiplier(v) => v[ik],
            SymbolData::Full(v) => v[ix * self.grid.size() + ik],
        }
    }

    /// Expanded `N × N` table.
    pub fn to_full(&self) -> Vec<Complex64> {
        match &self.data {
            SymbolData::Full(v) => v.clone(),
            SymbolData::Multiplier(v) => {
                let mut out = Vec::with_capacity(v.len() * v.len());
                for _ in 0..v.len() {
                    out.extend_from_slice(v);
                }
                out
            }
        }
    }

    pub fn into_full(self) -> Self {
        let v = self.to_full();
        Self { grid: self.grid, data: SymbolData::Full(v) }
    }

    /// Entrywise map.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let data = match &self.data {
            SymbolData::Multiplier(v) => SymbolData::Multiplier(v.iter().map(|z| f(*z)).collect()),
            SymbolData::Full(v) => SymbolData::Full(v.iter().map(|z| f(*z)).collect()),
        };
        Self { grid: self.grid, data }
    }

    /// Entrywise combination; stays a multiplier when both inputs are.
    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        let data = match (&self.data, &other.data) {
            (SymbolData::Multiplier(a), SymbolData::Multiplier(b)) => {
                SymbolData::Multiplier(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            }
            _ => {
                let n = self.grid.size();
                SymbolData::Full((0..n * n).map(|e| f(self.get(e / n, e % n), other.get(e / n, e % n))).collect())
            }
        };
        Ok(Self { grid: self.grid, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    /// `max_{i,k} |p(x_i, ξ_k)| · w(ξ_k)`.
    pub fn weighted_sup(&self, weight: &[f64]) -> f64 {
        let n = self.grid.size();
        match &self.data {
            SymbolData::Multiplier(v) => v.iter().zip(weight).fold(0.0, |m, (z, w)| m.max(z.norm() * w)),
            SymbolData::Full(v) => v.iter().enumerate().fold(0.0, |m, (e, z)| m.max(z.norm() * weight[e % n])),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let values = match &self.data {
            SymbolData::Multiplier(v) | SymbolData::Full(v) => v,
        };
        values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        let values = match &self.data {
            SymbolData::Multiplier(v) | SymbolData::Full(v) => v,
        };
        values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `⟨ξ_k⟩^{power}` weights for a reference `ψ`.
    pub fn bracket_weights(grid: &TorusGrid, psi: &crate::symbols::Psi, power: f64) -> Vec<f64> {
        (0..grid.size()).map(|k| crate::symbols::bracket(psi, &grid.freq_vec(k)).powf(power)).collect()
    }
}

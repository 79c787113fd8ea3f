use num_complex::Complex64;

use super::fourier;
use super::grid::{GridFunction, TorusGrid};
use super::symbol::{DiscreteSymbol, SymbolData};
use crate::quadrature::GaussRule;
use crate::symbols::TimeDependentSymbol;
use crate::{par, Error, Result};

/// Largest admissible `−Re ∫a` before `exp` is considered an overflow.
pub(crate) const EXP_GUARD: f64 = 700.0;

fn phase_table(grid: &TorusGrid) -> Vec<Complex64> {
    let n = grid.n;
    let mut t = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            t.push(Complex64::from_polar(1.0, grid.node(i) * grid.freq(k)));
        }
    }
    t
}

/// `x_i ↦ Σ_k e^{i x_i·ξ_k} p(x_i, ξ_k) û(ξ_k)`.
pub fn apply_pdo(sym: &DiscreteSymbol, u: &GridFunction) -> Result<GridFunction> {
    if sym.grid != u.grid {
        return Err(Error::GridMismatch(format!("symbol on {:?}, function on {:?}", sym.grid, u.grid)));
    }
    let grid = u.grid;
    if let SymbolData::Multiplier(m) = &sym.data {
        if m.iter().all(|p| *p == Complex64::new(1.0, 0.0)) {
            return Ok(u.clone());
        }
    }
    let mut hat = fourier::forward(&grid, &u.values);
    let values = match &sym.data {
        SymbolData::Multiplier(m) => {
            for (h, p) in hat.iter_mut().zip(m) {
                *h *= p;
            }
            fourier::inverse(&grid, &hat)
        }
        SymbolData::Full(table) => {
            let n = grid.n;
            let size = grid.size();
            let phase = phase_table(&grid);
            par::map_range(size, |ix| {
                let row = &table[ix * size..(ix + 1) * size];
                let x_idx = grid.unflatten(ix);
                let mut acc = Complex64::new(0.0, 0.0);
                for ik in 0..size {
                    let mut ph = Complex64::new(1.0, 0.0);
                    let mut r = ik;
                    for a in (0..grid.d).rev() {
                        ph *= phase[x_idx[a] * n + r % n];
                        r /= n;
                    }
                    acc += ph * row[ik] * hat[ik];
                }
                acc
            })
        }
    };
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("apply_pdo output"));
    }
    Ok(GridFunction { grid, values })
}

/// `∫_s^t a(τ; x, ξ) dτ`: exact for time-independent symbols, Gauss–Legendre otherwise.
pub fn slice_exponent(a: &TimeDependentSymbol, s: f64, t: f64, x: &[f64], xi: &[f64], rule: &GaussRule) -> Complex64 {
    if s == t {
        return Complex64::new(0.0, 0.0);
    }
    if a.is_time_independent() {
        return a.eval(s, x, xi) * (t - s);
    }
    rule.nodes.iter().zip(&rule.weights).map(|(tau, w)| a.eval(*tau, x, xi) * *w).sum()
}

/// `p(s,t; x_i, ξ_k) = exp(−∫_s^t a(τ; x_i, ξ_k) dτ)`.
pub fn frozen_exp_symbol(a: &TimeDependentSymbol, s: f64, t: f64, grid: &TorusGrid, n_quad: usize) -> Result<DiscreteSymbol> {
    if !(s <= t) {
        return Err(Error::InvalidArgument(format!("frozen exponential needs s ≤ t, got s={s}, t={t}")));
    }
    if a.dim != grid.d {
        return Err(Error::GridMismatch(format!("symbol dimension {} on a {}-d grid", a.dim, grid.d)));
    }
    if s == t {
        return Ok(DiscreteSymbol::one(*grid));
    }
    let rule = GaussRule::new(n_quad.max(1), s, t);
    let size = grid.size();
    let exp_at = |x: &[f64], xi: &[f64]| -> std::result::Result<Complex64, f64> {
        let e = slice_exponent(a, s, t, x, xi, &rule);
        if -e.re > EXP_GUARD || !e.re.is_finite() || !e.im.is_finite() {
            return Err(e.re);
        }
        Ok((-e).exp())
    };
    let overflow = |value: f64, x: Vec<f64>, xi: Vec<f64>| Error::Overflow { value, x, xi };
    if a.is_x_independent() {
        let x0 = vec![0.0; grid.d];
        let mut v = Vec::with_capacity(size);
        for k in 0..size {
            let xi = grid.freq_vec(k);
            v.push(exp_at(&x0, &xi).map_err(|e| overflow(e, x0.clone(), xi))?);
        }
        return DiscreteSymbol::multiplier(*grid, v);
    }
    let rows = par::map_range(size, |ix| {
        let x = grid.point(ix);
        (0..size)
            .map(|k| {
                let xi = grid.freq_vec(k);
                exp_at(&x, &xi).map_err(|e| overflow(e, x.clone(), xi))
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut table = Vec::with_capacity(size * size);
    for r in rows {
        table.extend(r?);
    }
    DiscreteSymbol::full(*grid, table)
}

/// Symbol of `Op(a1)∘Op(a2)` on the one-dimensional torus.
///
/// With `eps = 0` the oscillatory sum is evaluated through the x-Fourier coefficients of `a2`,
/// `b(x, ξ) = Σ_η e^{ixη} a1(x, ξ+η) â2(η, ξ)`, which reproduces the operator composition exactly.
/// With `eps > 0` the double lattice sum over `(y, η)` carries the cut-off `e^{−ε²(y²+η²)}`.
pub fn compose_kn(a1: &DiscreteSymbol, a2: &DiscreteSymbol, eps: f64) -> Result<DiscreteSymbol> {
    if a1.grid != a2.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a1.grid, a2.grid)));
    }
    let grid = a1.grid;
    if grid.d != 1 {
        return Err(Error::Dimension { d: grid.d, op: "compose_kn" });
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("regularization eps = {eps} must be ≥ 0")));
    }
    if let SymbolData::Multiplier(m2) = &a2.data {
        if eps == 0.0 || a1.is_multiplier() {
            return a1.zip_with(&DiscreteSymbol::multiplier(grid, m2.clone())?, |p, q| p * q);
        }
    }
    let n = grid.n;
    let h = n / 2;
    let phase = phase_table(&grid);
    let out: Vec<Vec<Complex64>> = if eps == 0.0 {
        // hat[k][j] = â2(η_j, ξ_k)
        let hat: Vec<Vec<Complex64>> = par::map_range(n, |k| {
            let col: Vec<Complex64> = (0..n).map(|i| a2.get(i, k)).collect();
            fourier::forward(&grid, &col)
        });
        par::map_range(n, |i| {
            (0..n)
                .map(|k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += phase[i * n + j] * a1.get(i, (k + j + n - h) % n) * hat[k][j];
                    }
                    acc
                })
                .collect()
        })
    } else {
        let dx = grid.dx();
        // kern[m][j] = e^{−i y_m η_j} χ(ε y_m, ε η_j) / n
        let kern: Vec<Complex64> = (0..n * n)
            .map(|e| {
                let (m, j) = (e / n, e % n);
                let y = (m as f64 - h as f64) * dx;
                let eta = grid.freq(j);
                let chi = (-(eps * eps) * (y * y + eta * eta)).exp();
                Complex64::from_polar(chi / n as f64, -y * eta)
            })
            .collect();
        par::map_range(n, |i| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            (0..n)
                .map(|k| {
                    v.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    for m in 0..n {
                        let a2v = a2.get((i + m + n - h) % n, k);
                        for j in 0..n {
                            v[j] += kern[m * n + j] * a2v;
                        }
                    }
                    (0..n).map(|j| a1.get(i, (k + j + n - h) % n) * v[j]).sum()
                })
                .collect()
        })
    };
    let sym = DiscreteSymbol::full(grid, out.concat())?;
    if !sym.is_finite() {
        return Err(Error::NonFinite("compose_kn output"));
    }
    Ok(sym)
}

/// Sensitivity of a regularized composition to the cut-off scale.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CompositionReport {
    pub eps: f64,
    /// `sup |b_ε − b_{ε/2}|`.
    pub halving_change: f64,
}

/// [`compose_kn`] together with the change observed when `eps` is halved.
pub fn compose_kn_checked(a1: &DiscreteSymbol, a2: &DiscreteSymbol, eps: f64) -> Result<(DiscreteSymbol, CompositionReport)> {
    let b = compose_kn(a1, a2, eps)?;
    let change = if eps > 0.0 { b.sub(&compose_kn(a1, a2, 0.5 * eps)?)?.sup_norm() } else { 0.0 };
    Ok((b, CompositionReport { eps, halving_change: change }))
}

/// `‖u‖_{H^{s,ψ}} = (L^d Σ_k (1+|ψ(ξ_k)|)^s |û_k|²)^{1/2}`.
pub fn psi_sobolev_norm<F: Fn(&[f64]) -> Complex64>(u: &GridFunction, psi: F, s: f64) -> Result<f64> {
    let grid = u.grid;
    let hat = fourier::forward(&grid, &u.values);
    let mut acc = 0.0;
    for (k, h) in hat.iter().enumerate() {
        let p = psi(&grid.freq_vec(k));
        if !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::NonFinite("ψ on the frequency lattice"));
        }
        acc += (1.0 + p.norm()).powf(s) * h.norm_sqr();
    }
    let v = (grid.l.powi(grid.d as i32) * acc).sqrt();
    if !v.is_finite() {
        return Err(Error::NonFinite("ψ-Sobolev norm"));
    }
    Ok(v)
}

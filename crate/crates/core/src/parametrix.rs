//! Levi–Mizohata parametrix: an independent approximation of the fundamental solution used to
//! cross-check the time-slicing construction.
//!
//! `e₀(τ) = exp(−∫_s^τ a)`, and for `j ≥ 1`, `∂_τ e_j + a e_j = −q_j`, `e_j(s) = 0`, with
//! `q_j = Σ_{k<j} Σ_{|α|+k=j, |α|≤2} (1/α!) ∂_ξ^α a · D_x^α e_k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{spectral_dx, DerivativeSource};
use crate::pdo::{apply_pdo, frozen_exp_symbol, DiscreteSymbol, GridFunction, TorusGrid};
use crate::symbols::fd;
use crate::symbols::TimeDependentSymbol;
use crate::timeslice::{evolve_time_sliced, Partition};
use crate::{par, Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeviOptions {
    /// Depth `J ≤ 3`.
    pub depth: usize,
    /// Trapezoid intervals on `[s, t]`.
    pub n_time_nodes: usize,
    pub n_quad: usize,
    pub fd_step: f64,
    pub derivatives: DerivativeSource,
}

impl Default for LeviOptions {
    fn default() -> Self {
        Self { depth: 2, n_time_nodes: 200, n_quad: 4, fd_step: fd::FD_STEP, derivatives: DerivativeSource::FiniteDifference }
    }
}

#[derive(Clone, Debug)]
pub struct ParametrixExpansion {
    pub s: f64,
    pub t: f64,
    pub depth: usize,
    /// Shared time nodes `s = τ₀ < … < τ_N = t`.
    pub times: Vec<f64>,
    /// `levels[j][i] = e_j(τ_i)`.
    pub levels: Vec<Vec<DiscreteSymbol>>,
    /// Per level, `max_i sup |∂_τ e_j + a e_j + q_j|` over interior nodes (central differences),
    /// relative to `sup |q_j|`. Zero for `e₀`.
    pub ode_residuals: Vec<f64>,
}

impl ParametrixExpansion {
    /// `Σ_{j≤J} e_j(τ_i)`.
    pub fn partial_sum(&self, depth: usize, node: usize) -> Result<DiscreteSymbol> {
        if depth > self.depth || node >= self.times.len() {
            return Err(Error::InvalidArgument(format!("no level {depth} at node {node}")));
        }
        let mut acc = self.levels[0][node].clone();
        for j in 1..=depth {
            acc = acc.add(&self.levels[j][node])?;
        }
        Ok(acc)
    }

    /// `Op(Σ_{j≤J} e_j(t)) u0`.
    pub fn apply(&self, depth: usize, u0: &GridFunction) -> Result<GridFunction> {
        apply_pdo(&self.partial_sum(depth, self.times.len() - 1)?, u0)
    }
}

/// `(a, ∂_ξ a, ∂²_ξ a)` at `(τ, x, ξ)`.
fn symbol_jet(a: &TimeDependentSymbol, tau: f64, x: f64, xi: f64, opts: &LeviOptions) -> [Complex64; 3] {
    if opts.derivatives == DerivativeSource::Analytic {
        if let Some(j) = a.jet_1d(tau, x, xi) {
            return [j[0][0], j[1][0], j[2][0]];
        }
    }
    let f = |z: f64| a.eval_1d(tau, x, z);
    [f(xi), fd::derivative(f, xi, 1, opts.fd_step), fd::derivative(f, xi, 2, opts.fd_step)]
}

/// Builds `e₀, …, e_J` on `n_time_nodes + 1` uniform nodes of `[s, t]`.
pub fn levi_expansion(a: &TimeDependentSymbol, s: f64, t: f64, grid: &TorusGrid, opts: &LeviOptions) -> Result<ParametrixExpansion> {
    if grid.d != 1 || a.dim != 1 {
        return Err(Error::Dimension { d: grid.d.max(a.dim), op: "levi_expansion" });
    }
    if opts.depth > 3 {
        return Err(Error::InvalidArgument(format!("parametrix depth {} exceeds 3", opts.depth)));
    }
    if !(s < t) || opts.n_time_nodes < 2 {
        return Err(Error::InvalidArgument("levi_expansion needs s < t and at least 2 time steps".into()));
    }
    let nt = opts.n_time_nodes;
    let times: Vec<f64> = (0..=nt).map(|i| if i == nt { t } else { s + (t - s) * i as f64 / nt as f64 }).collect();
    let e0: Vec<DiscreteSymbol> = times.iter().map(|&tau| frozen_exp_symbol(a, s, tau, grid, opts.n_quad)).collect::<Result<_>>()?;
    let depth = opts.depth;
    if a.is_x_independent() || depth == 0 {
        let mut levels = vec![e0];
        levels.extend((1..=depth).map(|_| vec![DiscreteSymbol::zero(*grid); nt + 1]));
        return Ok(ParametrixExpansion { s, t, depth, times, levels, ode_residuals: vec![0.0; depth + 1] });
    }

    let n = grid.n;
    let nodes = grid.nodes();
    // Per frequency column: levels[j][i][x], plus the residual numerator and q scale per level.
    let columns = par::map_range(n, |k| -> Result<(Vec<Vec<Vec<Complex64>>>, Vec<(f64, f64)>)> {
        let xi = grid.freq(k);
        let jets: Vec<Vec<[Complex64; 3]>> = times.iter().map(|&tau| nodes.iter().map(|&x| symbol_jet(a, tau, x, xi, opts)).collect()).collect();
        let mut step = vec![vec![C0; n]; nt + 1];
        for i in 1..=nt {
            let rule = crate::quadrature::GaussRule::new(opts.n_quad.max(1), times[i - 1], times[i]);
            for (x, &xv) in nodes.iter().enumerate() {
                let e = crate::pdo::slice_exponent(a, times[i - 1], times[i], &[xv], &[xi], &rule);
                if -e.re > crate::pdo::EXP_GUARD || !e.re.is_finite() {
                    return Err(Error::Overflow { value: e.re, x: vec![xv], xi: vec![xi] });
                }
                step[i][x] = (-e).exp();
            }
        }
        let mut lv: Vec<Vec<Vec<Complex64>>> = vec![(0..=nt).map(|i| (0..n).map(|x| e0[i].get(x, k)).collect()).collect()];
        let mut res = vec![(0.0, 0.0)];
        for j in 1..=depth {
            let q: Vec<Vec<Complex64>> = (0..=nt)
                .map(|i| {
                    let mut q = vec![C0; n];
                    // |α| = 1 with e_{j−1}, |α| = 2 with e_{j−2}.
                    let d1 = spectral_dx(grid, &lv[j - 1][i], 1);
                    for x in 0..n {
                        q[x] += jets[i][x][1] * d1[x];
                    }
                    if j >= 2 {
                        let d2 = spectral_dx(grid, &lv[j - 2][i], 2);
                        for x in 0..n {
                            q[x] += 0.5 * jets[i][x][2] * d2[x];
                        }
                    }
                    q
                })
                .collect();
            let mut e = vec![vec![C0; n]; nt + 1];
            for i in 1..=nt {
                let h = times[i] - times[i - 1];
                for x in 0..n {
                    let f = step[i][x];
                    e[i][x] = f * e[i - 1][x] - 0.5 * h * (f * q[i - 1][x] + q[i][x]);
                }
            }
            let mut num = 0.0f64;
            for i in 1..nt {
                let h2 = times[i + 1] - times[i - 1];
                for x in 0..n {
                    let dt = (e[i + 1][x] - e[i - 1][x]) / h2;
                    num = num.max((dt + jets[i][x][0] * e[i][x] + q[i][x]).norm());
                }
            }
            let qmax = q.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
            res.push((num, qmax));
            lv.push(e);
        }
        Ok((lv, res))
    });
    let columns: Vec<_> = columns.into_iter().collect::<Result<_>>()?;

    let mut levels = vec![e0];
    for j in 1..=depth {
        let per_node = (0..=nt)
            .map(|i| {
                let mut table = vec![C0; n * n];
                for (k, (lv, _)) in columns.iter().enumerate() {
                    for x in 0..n {
                        table[x * n + k] = lv[j][i][x];
                    }
                }
                DiscreteSymbol::full(*grid, table)
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(per_node);
    }
    let ode_residuals = (0..=depth)
        .map(|j| {
            let (num, q) = columns.iter().fold((0.0f64, 0.0f64), |(a, b), (_, r)| (a.max(r[j].0), b.max(r[j].1)));
            if q > 0.0 { num / q } else { num }
        })
        .collect();
    Ok(ParametrixExpansion { s, t, depth, times, levels, ode_residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationRow {
    #[serde(rename = "J")]
    pub depth: usize,
    pub k: usize,
    /// Relative L² distance between the two solutions at `t`.
    pub distance: f64,
    /// Relative evolution-equation residual of the time-sliced solution at `t`.
    pub residual_ts: f64,
    /// Relative evolution-equation residual of the parametrix solution at `t`.
    pub residual_levi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub rows: Vec<CrossValidationRow>,
    /// Distance non-increasing (up to 10%, or below [`DISTANCE_FLOOR`]) in `J` at the largest `k` and in `k` at the largest `J`.
    pub monotone: bool,
}

/// Allowed relative increase between consecutive fidelity levels.
pub const MONOTONE_SLACK: f64 = 0.10;

/// Distances below this are round-off; their ordering carries no information.
pub const DISTANCE_FLOOR: f64 = 1e-12;

/// `‖(u(t) − u(t−2h))/(2h) + Op(a(t−h)) u(t−h)‖ / ‖Op(a(t−h)) u(t−h)‖`.
fn evolution_residual(a: &TimeDependentSymbol, grid: &TorusGrid, tau: f64, h: f64, u: [&GridFunction; 3]) -> Result<f64> {
    let a_sym = DiscreteSymbol::from_fn(*grid, |x, xi| a.eval(tau, x, xi));
    let au = apply_pdo(&a_sym, u[1])?;
    let dt = u[2].sub(u[0])?.scale(0.5 / h);
    Ok(dt.add(&au)?.l2_norm() / au.l2_norm().max(f64::MIN_POSITIVE))
}

/// Compares the parametrix of each depth in `depths` with time slicing at each `k` in `ks`.
pub fn cross_validate(
    a: &TimeDependentSymbol,
    s: f64,
    t: f64,
    depths: &[usize],
    ks: &[usize],
    u0: &GridFunction,
    opts: &LeviOptions,
) -> Result<CrossValidationReport> {
    let grid = u0.grid;
    if depths.is_empty() || ks.is_empty() {
        return Err(Error::InvalidArgument("cross_validate needs at least one depth and one slice count".into()));
    }
    let max_depth = *depths.iter().max().unwrap();
    let exp = levi_expansion(a, s, t, &grid, &LeviOptions { depth: max_depth, ..opts.clone() })?;
    let nt = exp.times.len() - 1;
    let h = exp.times[nt] - exp.times[nt - 1];

    let mut levi = Vec::with_capacity(depths.len());
    for &j in depths {
        let u: Vec<GridFunction> = (nt - 2..=nt).map(|i| apply_pdo(&exp.partial_sum(j, i)?, u0)).collect::<Result<_>>()?;
        let r = evolution_residual(a, &grid, exp.times[nt - 1], h, [&u[0], &u[1], &u[2]])?;
        levi.push((u[2].clone(), r));
    }
    let mut ts = Vec::with_capacity(ks.len());
    for &k in ks {
        let u: Vec<GridFunction> = [t - 2.0 * h, t - h, t]
            .iter()
            .map(|&tau| evolve_time_sliced(a, &Partition::slices(s, tau, k)?, u0, opts.n_quad))
            .collect::<Result<_>>()?;
        let r = evolution_residual(a, &grid, t - h, h, [&u[0], &u[1], &u[2]])?;
        ts.push((u[2].clone(), r));
    }
    let mut rows = vec![];
    for (jd, &j) in depths.iter().enumerate() {
        for (kd, &k) in ks.iter().enumerate() {
            rows.push(CrossValidationRow {
                depth: j,
                k,
                distance: levi[jd].0.relative_l2_distance(&ts[kd].0)?,
                residual_ts: ts[kd].1,
                residual_levi: levi[jd].1,
            });
        }
    }
    let monotone = is_monotone(&rows, depths, ks);
    Ok(CrossValidationReport { rows, monotone })
}

fn is_monotone(rows: &[CrossValidationRow], depths: &[usize], ks: &[usize]) -> bool {
    let dist = |j: usize, k: usize| rows.iter().find(|r| r.depth == j && r.k == k).map(|r| r.distance).unwrap();
    let mut js = depths.to_vec();
    js.sort_unstable();
    js.dedup();
    let mut kk = ks.to_vec();
    kk.sort_unstable();
    kk.dedup();
    let (jmax, kmax) = (*js.last().unwrap(), *kk.last().unwrap());
    let no_worse = |fine: f64, coarse: f64| fine <= (1.0 + MONOTONE_SLACK) * coarse + DISTANCE_FLOOR;
    let ok_j = js.windows(2).all(|w| no_worse(dist(w[1], kmax), dist(w[0], kmax)));
    let ok_k = kk.windows(2).all(|w| no_worse(dist(jmax, w[1]), dist(jmax, w[0])));
    ok_j && ok_k
}

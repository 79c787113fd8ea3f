//! Partitions of a time window, the sliced product of frozen exponentials and its mesh→0 limit.

use serde::{Deserialize, Serialize};

use crate::pdo::{apply_pdo, compose_kn, frozen_exp_symbol, DiscreteSymbol, GridFunction, TorusGrid};
use crate::symbols::TimeDependentSymbol;
use crate::{Error, Result};

/// Ordered time points `t₀ ≤ t₁ ≤ … ≤ t_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    times: Vec<f64>,
}

/// How to build a partition of `[s, t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSpec {
    /// `k` equally spaced interior points, i.e. `k + 1` slices.
    Uniform(usize),
    Explicit(Vec<f64>),
    /// Split every interval of `parent` into `splits` equal pieces.
    Refine { parent: Partition, splits: usize },
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidPartition("a partition needs at least its two endpoints".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPartition("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::InvalidPartition(format!("times decrease from {} to {}", w[0], w[1])));
        }
        Ok(Self { times })
    }

    /// `[s, t]` cut into `m ≥ 1` equal slices.
    pub fn slices(s: f64, t: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPartition("number of slices must be positive".into()));
        }
        let mut times: Vec<f64> = (0..=m).map(|j| s + (t - s) * j as f64 / m as f64).collect();
        times[m] = t;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Number of slices `k + 1`.
    pub fn num_slices(&self) -> usize {
        self.times.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).fold(0.0, |m, w| m.max(w[1] - w[0]))
    }

    /// `π_{t_i, t_j}`: the points `t_i, …, t_j`.
    pub fn sub(&self, i: usize, j: usize) -> Result<Self> {
        if i > j || j >= self.times.len() {
            return Err(Error::InvalidPartition(format!("sub-partition ({i}, {j}) out of range")));
        }
        Self::new(self.times[i..=j].to_vec())
    }

    /// Same endpoints and every point of `parent` is also a point of `self`.
    pub fn refines(&self, parent: &Partition) -> bool {
        let tol = 1e-12 * (1.0 + self.end().abs());
        (self.start() - parent.start()).abs() <= tol
            && (self.end() - parent.end()).abs() <= tol
            && parent.times.iter().all(|p| self.times.iter().any(|q| (p - q).abs() <= tol))
    }

    pub fn concat(&self, next: &Partition) -> Result<Self> {
        if self.end() != next.start() {
            return Err(Error::InvalidPartition(format!("cannot join at {} and {}", self.end(), next.start())));
        }
        let mut t = self.times.clone();
        t.extend_from_slice(&next.times[1..]);
        Self::new(t)
    }
}

pub fn build_partition(s: f64, t: f64, spec: &PartitionSpec) -> Result<Partition> {
    if !(s <= t) {
        return Err(Error::InvalidPartition(format!("s = {s} exceeds t = {t}")));
    }
    match spec {
        PartitionSpec::Uniform(k) => Partition::slices(s, t, k + 1),
        PartitionSpec::Explicit(times) => {
            let p = Partition::new(times.clone())?;
            if p.start() != s || p.end() != t {
                return Err(Error::InvalidPartition(format!(
                    "explicit times run from {} to {}, expected [{s}, {t}]",
                    p.start(),
                    p.end()
                )));
            }
            Ok(p)
        }
        PartitionSpec::Refine { parent, splits } => {
            if parent.start() != s || parent.end() != t {
                return Err(Error::InvalidPartition(format!(
                    "parent covers [{}, {}], not [{s}, {t}]",
                    parent.start(),
                    parent.end()
                )));
            }
            if *splits == 0 {
                return Err(Error::InvalidPartition("splits per interval must be positive".into()));
            }
            let mut times = vec![s];
            for w in parent.times.windows(2) {
                for j in 1..=*splits {
                    times.push(if j == *splits { w[1] } else { w[0] + (w[1] - w[0]) * j as f64 / *splits as f64 });
                }
            }
            Partition::new(times)
        }
    }
}

fn check_window(a: &TimeDependentSymbol, pi: &Partition) -> Result<()> {
    let tol = 1e-12 * (1.0 + a.horizon);
    if pi.start() < -tol || pi.end() > a.horizon + tol {
        return Err(Error::InvalidPartition(format!(
            "partition [{}, {}] leaves the horizon [0, {}]",
            pi.start(),
            pi.end(),
            a.horizon
        )));
    }
    Ok(())
}

/// Frozen exponentials `p(t_j, t_{j+1})` for every slice.
pub fn slice_symbols(a: &TimeDependentSymbol, pi: &Partition, grid: &TorusGrid, n_quad: usize) -> Result<Vec<DiscreteSymbol>> {
    check_window(a, pi)?;
    pi.times.windows(2).map(|w| frozen_exp_symbol(a, w[0], w[1], grid, n_quad)).collect()
}

/// `Op(p(t₀,t₁)) ∘ … ∘ Op(p(t_k,t_{k+1})) u₀`, the last slice acting first.
pub fn evolve_time_sliced(a: &TimeDependentSymbol, pi: &Partition, u0: &GridFunction, n_quad: usize) -> Result<GridFunction> {
    check_window(a, pi)?;
    let mut u = u0.clone();
    for w in pi.times.windows(2).rev() {
        if w[0] == w[1] {
            continue;
        }
        let p = frozen_exp_symbol(a, w[0], w[1], &u.grid, n_quad)?;
        u = apply_pdo(&p, &u)?;
    }
    Ok(u)
}

/// `p(π) = p(t₀,t₁) # … # p(t_k,t_{k+1})`, folded from the left.
pub fn sliced_symbol(a: &TimeDependentSymbol, pi: &Partition, grid: &TorusGrid, n_quad: usize, eps: f64) -> Result<DiscreteSymbol> {
    let slices = slice_symbols(a, pi, grid, n_quad)?;
    let mut it = slices.into_iter();
    let mut acc = it.next().expect("partition has at least one slice");
    for p in it {
        acc = compose_kn(&acc, &p, eps)?;
    }
    Ok(acc)
}

/// `max_{i,k} |p(π)(x_i,ξ_k) − p(π′)(x_i,ξ_k)| ⟨ξ_k⟩^{−2m}`.
pub fn refinement_delta(
    a: &TimeDependentSymbol,
    pi: &Partition,
    pi_refined: &Partition,
    grid: &TorusGrid,
    n_quad: usize,
    eps: f64,
) -> Result<f64> {
    if !pi_refined.refines(pi) {
        return Err(Error::InvalidPartition("second partition is not a refinement of the first".into()));
    }
    if pi == pi_refined {
        return Ok(0.0);
    }
    let p = sliced_symbol(a, pi, grid, n_quad, eps)?;
    let q = sliced_symbol(a, pi_refined, grid, n_quad, eps)?;
    weighted_distance(a, grid, &p, &q)
}

fn weighted_distance(a: &TimeDependentSymbol, grid: &TorusGrid, p: &DiscreteSymbol, q: &DiscreteSymbol) -> Result<f64> {
    let w = DiscreteSymbol::bracket_weights(grid, &a.psi_ref, -2.0 * a.m);
    Ok(p.sub(q)?.weighted_sup(&w))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Number of slices.
    pub k: usize,
    pub mesh: f64,
    /// Weighted distance to the previous level; `NaN` on the first level.
    pub delta: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlimOptions {
    pub tol: f64,
    /// Largest number of slices tried.
    pub k_max: usize,
    pub n_quad: usize,
    pub eps: f64,
    /// Measure wall-clock time per level; otherwise `runtime_ms` is 0 and the trace is reproducible.
    pub record_timing: bool,
}

impl Default for PlimOptions {
    fn default() -> Self {
        Self { tol: 1e-6, k_max: 64, n_quad: 4, eps: 0.0, record_timing: false }
    }
}

#[derive(Clone, Debug)]
pub struct PlimResult {
    pub symbol: DiscreteSymbol,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

/// Sliced symbols on 1, 2, 4, … uniform slices until successive levels differ by less than `tol`.
pub fn plim_extrapolate(a: &TimeDependentSymbol, s: f64, t: f64, grid: &TorusGrid, opts: &PlimOptions) -> Result<PlimResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let mut trace = vec![];
    let mut prev: Option<DiscreteSymbol> = None;
    let mut k = 1;
    loop {
        let clock = opts.record_timing.then(std::time::Instant::now);
        let pi = Partition::slices(s, t, k)?;
        let sym = sliced_symbol(a, &pi, grid, opts.n_quad, opts.eps)?;
        let delta = match &prev {
            Some(p) => weighted_distance(a, grid, &sym, p)?,
            None => f64::NAN,
        };
        let runtime_ms = clock.map_or(0.0, |c| c.elapsed().as_secs_f64() * 1e3);
        trace.push(TraceRow { k, mesh: pi.mesh(), delta, runtime_ms });
        if delta < opts.tol {
            return Ok(PlimResult { symbol: sym, trace, converged: true });
        }
        if 2 * k > opts.k_max {
            return Ok(PlimResult { symbol: sym, trace, converged: false });
        }
        prev = Some(sym);
        k *= 2;
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::symbols::{Modulation, Psi};
    use num_complex::Complex64;

    fn heat() -> TimeDependentSymbol {
        TimeDependentSymbol::multiplier(Psi::quadratic(), 1).unwrap()
    }

    fn modulated(l: f64) -> TimeDependentSymbol {
        TimeDependentSymbol::separable(Modulation { amp: 0.5, freq: 2.0 * PI / l }, Psi::power(1.5), 1).unwrap()
    }

    fn gaussian_variance(grid: TorusGrid, var: f64) -> GridFunction {
        GridFunction::gaussian(grid, var.sqrt(), &[0.0])
    }

    #[test]
    fn partition_examples() {
        let p = build_partition(0.0, 1.0, &PartitionSpec::Uniform(1)).unwrap();
        assert_eq!(p.times(), &[0.0, 0.5, 1.0]);
        assert_eq!(p.mesh(), 0.5);
        let r = build_partition(0.0, 1.0, &PartitionSpec::Refine { parent: p.clone(), splits: 2 }).unwrap();
        assert_eq!(r.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(r.refines(&p) && !p.refines(&r));
        let e = build_partition(0.0, 1.0, &PartitionSpec::Explicit(vec![0.0, 0.1, 0.7, 1.0])).unwrap();
        assert!((e.mesh() - 0.6).abs() < 1e-15);
        assert!(build_partition(0.0, 1.0, &PartitionSpec::Explicit(vec![0.0, 0.7, 0.1, 1.0])).is_err());
        let other = Partition::slices(0.0, 2.0, 2).unwrap();
        assert!(build_partition(0.0, 1.0, &PartitionSpec::Refine { parent: other, splits: 2 }).is_err());
    }

    #[test]
    fn multiplier_slicing_telescopes() {
        let g = TorusGrid::new(1, 256, 20.0).unwrap();
        let u0 = gaussian_variance(g, 1.0);
        let a = heat();
        let one = evolve_time_sliced(&a, &Partition::slices(0.0, 0.5, 1).unwrap(), &u0, 4).unwrap();
        let many = evolve_time_sliced(&a, &Partition::slices(0.0, 0.5, 16).unwrap(), &u0, 4).unwrap();
        assert!(one.sup_distance(&many).unwrap() <= 1e-12);
        let exact = gaussian_variance(g, 2.0);
        assert!(one.sup_distance(&exact).unwrap() <= 1e-6);
        let same = evolve_time_sliced(&a, &Partition::new(vec![0.3, 0.3]).unwrap(), &u0, 4).unwrap();
        assert_eq!(same, u0);
    }

    #[test]
    fn evolution_splits_at_intermediate_time() {
        let g = TorusGrid::new(1, 128, 20.0).unwrap();
        let u0 = gaussian_variance(g, 0.5);
        let a = TimeDependentSymbol::multiplier(Psi::relativistic(), 1).unwrap();
        let first = Partition::slices(0.0, 0.2, 3).unwrap();
        let second = Partition::slices(0.2, 0.5, 5).unwrap();
        let whole = evolve_time_sliced(&a, &first.concat(&second).unwrap(), &u0, 4).unwrap();
        let split = evolve_time_sliced(&a, &first, &evolve_time_sliced(&a, &second, &u0, 4).unwrap(), 4).unwrap();
        assert!(whole.sup_distance(&split).unwrap() <= 1e-12);
    }

    #[test]
    fn sliced_symbol_examples() {
        let g = TorusGrid::new(1, 32, 20.0).unwrap();
        let a = heat();
        let pi = Partition::slices(0.0, 0.4, 4).unwrap();
        let p = sliced_symbol(&a, &pi, &g, 4, 0.0).unwrap();
        let q0 = frozen_exp_symbol(&a, 0.0, 0.4, &g, 4).unwrap();
        assert!(p.sub(&q0).unwrap().sup_norm() <= 1e-10);

        let m = modulated(g.l);
        let single = Partition::slices(0.0, 0.4, 1).unwrap();
        assert_eq!(sliced_symbol(&m, &single, &g, 4, 0.0).unwrap(), frozen_exp_symbol(&m, 0.0, 0.4, &g, 4).unwrap());

        let u = GridFunction::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let via_symbol = apply_pdo(&sliced_symbol(&m, &pi, &g, 4, 0.0).unwrap(), &u).unwrap();
        let via_ops = evolve_time_sliced(&m, &pi, &u, 4).unwrap();
        assert!(via_symbol.relative_l2_distance(&via_ops).unwrap() <= 1e-5);
        assert!(sliced_symbol(&m, &pi, &g, 4, 0.0).unwrap().sup_norm() <= 1.5);
    }

    #[test]
    fn refinement_delta_degenerate_cases() {
        let g = TorusGrid::new(1, 32, 20.0).unwrap();
        let p = Partition::slices(0.0, 0.5, 2).unwrap();
        let r = Partition::slices(0.0, 0.5, 8).unwrap();
        assert!(refinement_delta(&heat(), &p, &r, &g, 4, 0.0).unwrap() <= 1e-10);
        assert_eq!(refinement_delta(&modulated(g.l), &p, &p, &g, 4, 0.0).unwrap(), 0.0);
        assert!(refinement_delta(&heat(), &r, &p, &g, 4, 0.0).is_err());
    }

    #[test]
    fn refinement_delta_is_first_order() {
        let g = TorusGrid::new(1, 32, 20.0).unwrap();
        let a = modulated(g.l);
        let d: Vec<f64> = [2, 4, 8]
            .windows(2)
            .map(|w| {
                let p = Partition::slices(0.0, 0.5, w[0]).unwrap();
                let q = Partition::slices(0.0, 0.5, w[1]).unwrap();
                refinement_delta(&a, &p, &q, &g, 4, 0.0).unwrap()
            })
            .collect();
        let ratio = d[0] / d[1];
        assert!((1.5..=2.6).contains(&ratio), "{d:?}");
    }

    #[test]
    fn plim_for_multiplier_converges_immediately() {
        let g = TorusGrid::new(1, 32, 20.0).unwrap();
        let r = plim_extrapolate(&heat(), 0.0, 0.5, &g, &PlimOptions { tol: 1e-10, ..Default::default() }).unwrap();
        assert!(r.converged);
        assert_eq!(r.trace.last().unwrap().k, 2);
        assert!(r.trace[1].delta < 1e-10);
        assert!(r.trace.iter().all(|row| row.runtime_ms == 0.0));
    }

    #[test]
    fn plim_delta_sequence_halves_for_modulated_symbol() {
        let g = TorusGrid::new(1, 32, 20.0).unwrap();
        let r = plim_extrapolate(&modulated(g.l), 0.0, 0.5, &g, &PlimOptions { tol: 1e-12, k_max: 16, ..Default::default() })
            .unwrap();
        assert!(!r.converged);
        let deltas: Vec<f64> = r.trace.iter().skip(1).map(|row| row.delta).collect();
        for w in deltas.windows(2) {
            assert!(w[1] < w[0]);
            assert!((1.5..=2.6).contains(&(w[0] / w[1])), "{deltas:?}");
        }
    }

    #[test]
    fn heat_plim_solves_the_evolution_equation() {
        let g = TorusGrid::new(1, 256, 20.0).unwrap();
        let a = heat();
        let u0 = gaussian_variance(g, 1.0);
        let opts = PlimOptions { tol: 1e-10, ..Default::default() };
        let at = |t: f64| {
            let p = plim_extrapolate(&a, 0.0, t, &g, &opts).unwrap();
            apply_pdo(&p.symbol, &u0).unwrap()
        };
        let t = 0.5;
        let u = at(t);
        assert!(u.sup_distance(&gaussian_variance(g, 2.0)).unwrap() <= 1e-6);
        let h = 1e-4;
        let dt = at(t + h).sub(&at(t - h)).unwrap().scale(0.5 / h);
        let au = apply_pdo(&DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(xi[0] * xi[0], 0.0)), &u).unwrap();
        assert!(dt.add(&au).unwrap().l2_norm() <= 1e-3);
    }
}

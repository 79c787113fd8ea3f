//! Evaluation of `q₀`, `q₁`, `r` and unwrapped compositions at arbitrary frequencies.
//!
//! Symbols are handled as functions of a continuous `ξ`, sampled on the spatial lattice. A
//! composition `f # g` is evaluated as `Σ_η f(x, ξ+η) G(x, η)` with `G` built from the x-Fourier
//! coefficients of `g(·, ξ)`, so the left factor is needed on the frequency lattice extended to
//! `[−n, n)` and the right factor only on the base lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jets::{spectral_dx, Jet};
use crate::pdo::{fourier, slice_exponent, DiscreteSymbol, TorusGrid};
use crate::quadrature::{gauss_legendre, GaussRule};
use crate::symbols::fd::derivative;
use crate::symbols::TimeDependentSymbol;
use crate::timeslice::Partition;
use crate::{par, Error, Result};

/// Source of the ξ-derivatives of the symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    FiniteDifference,
    /// Use the symbol's analytic derivative table; falls back to finite differences without one.
    Analytic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionOptions {
    /// Gauss–Legendre nodes per slice for the time integral.
    pub n_quad: usize,
    /// Gauss–Legendre nodes for the θ-integral (per sub-interval).
    pub n_theta: usize,
    pub fd_step: f64,
    /// Cut-off scale of the `(y, η)` sum; 0 evaluates it exactly through Fourier coefficients.
    pub eps: f64,
    pub derivatives: DerivativeSource,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self { n_quad: 4, n_theta: 8, fd_step: crate::symbols::fd::FD_STEP, eps: 0.0, derivatives: DerivativeSource::FiniteDifference }
    }
}

/// Columns `c ↦ f(·, ξ_{offset+c})` of a symbol, one vector over the spatial lattice each.
#[derive(Clone, Debug)]
pub(crate) struct Columns {
    pub offset: isize,
    pub cols: Vec<Vec<Complex64>>,
}

impl Columns {
    pub fn to_symbol(&self, grid: &TorusGrid) -> Result<DiscreteSymbol> {
        let n = grid.n;
        debug_assert_eq!(self.offset, -(n as isize / 2));
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for (k, col) in self.cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                t[i * n + k] = *v;
            }
        }
        DiscreteSymbol::full(*grid, t)
    }

    pub fn add(&self, other: &Columns) -> Columns {
        let cols = self.cols.iter().zip(&other.cols).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        Columns { offset: self.offset, cols }
    }
}

pub(crate) struct Engine<'a> {
    pub a: &'a TimeDependentSymbol,
    pub grid: TorusGrid,
    pub times: Vec<f64>,
    rules: Vec<GaussRule>,
    theta: (Vec<f64>, Vec<f64>),
    pub opts: DecompositionOptions,
    nodes: Vec<f64>,
}

impl<'a> Engine<'a> {
    pub fn new(a: &'a TimeDependentSymbol, pi: &Partition, grid: &TorusGrid, opts: &DecompositionOptions) -> Result<Self> {
        if grid.d != 1 || a.dim != 1 {
            return Err(Error::Dimension { d: grid.d.max(a.dim), op: "decomposition" });
        }
        if opts.n_theta < 4 {
            return Err(Error::InvalidArgument(format!("n_theta = {} is below 4", opts.n_theta)));
        }
        if !(opts.fd_step > 0.0) || !(opts.eps >= 0.0) {
            return Err(Error::InvalidArgument("fd_step must be positive and eps non-negative".into()));
        }
        let times = pi.times().to_vec();
        let rules = times.windows(2).map(|w| GaussRule::new(opts.n_quad.max(1), w[0], w[1])).collect();
        let (u, w) = gauss_legendre(opts.n_theta);
        let theta = (u.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect());
        Ok(Self { a, grid: *grid, times, rules, theta, opts: opts.clone(), nodes: grid.nodes() })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn freq_of(&self, k: isize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.grid.l
    }

    /// `(A, ∂_ξA, ∂²_ξA)` of `A = ∫ a dτ` over slice `l` at `(x, ξ)`.
    fn log_jet(&self, l: usize, x: f64, xi: f64) -> [Complex64; 3] {
        let (s, t) = (self.times[l], self.times[l + 1]);
        let rule = &self.rules[l];
        if s == t {
            return [Complex64::new(0.0, 0.0); 3];
        }
        if self.opts.derivatives == DerivativeSource::Analytic && self.a.has_jet() {
            let mut out = [Complex64::new(0.0, 0.0); 3];
            let nodes: Vec<(f64, f64)> = if self.a.is_time_independent() {
                vec![(s, t - s)]
            } else {
                rule.nodes.iter().cloned().zip(rule.weights.iter().cloned()).collect()
            };
            let mut ok = true;
            for (tau, w) in nodes {
                match self.a.jet_1d(tau, x, xi) {
                    Some(j) => {
                        for m in 0..3 {
                            out[m] += j[m][0] * w;
                        }
                    }
                    None => ok = false,
                }
            }
            if ok {
                return out;
            }
        }
        let f = |z: f64| slice_exponent(self.a, s, t, &[x], &[z], rule);
        let step = self.opts.fd_step;
        [f(xi), derivative(f, xi, 1, step), derivative(f, xi, 2, step)]
    }

    /// Jet of `p(t_l, t_{l+1})` at `ξ`, truncated at `order ≤ 2`.
    pub fn slice_jet(&self, l: usize, xi: f64, order: usize) -> Jet {
        let n = self.n();
        let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; order + 1];
        for i in 0..n {
            let x = self.nodes[i];
            let (a0, a1, a2) = if order == 0 {
                let rule = &self.rules[l];
                (slice_exponent(self.a, self.times[l], self.times[l + 1], &[x], &[xi], rule), Complex64::default(), Complex64::default())
            } else {
                let j = self.log_jet(l, x, xi);
                (j[0], j[1], j[2])
            };
            let p = (-a0).exp();
            c[0][i] = p;
            if order >= 1 {
                c[1][i] = -a1 * p;
            }
            if order >= 2 {
                c[2][i] = (a1 * a1 - a2) * p;
            }
        }
        Jet { c }
    }

    /// Jets of all slices in `[i, j)`.
    pub fn slice_jets(&self, i: usize, j: usize, xi: f64, order: usize) -> Vec<Jet> {
        (i..j).map(|l| self.slice_jet(l, xi, order)).collect()
    }

    /// `q₀` over consecutive slices: their product.
    pub fn q0_of(&self, jets: &[Jet], order: usize) -> Jet {
        let mut acc = Jet::constant(self.n(), order, Complex64::new(1.0, 0.0));
        for j in jets {
            acc = acc.mul(&j.truncate(order));
        }
        acc
    }

    /// `q₁ = Σ_l ∂_ξ(p_0⋯p_{l−1}) · D_x p_l · p_{l+1}⋯p_last`, to ξ-order `order ≤ 1`.
    pub fn q1_of(&self, jets: &[Jet], order: usize) -> Jet {
        let n = self.n();
        let mut acc = Jet::constant(n, order, Complex64::new(0.0, 0.0));
        if jets.len() < 2 {
            return acc;
        }
        let lo = order + 1;
        for l in 1..jets.len() {
            let left = self.q0_of(&jets[..l], lo).shift();
            let mid = jets[l].truncate(order).dx(&self.grid);
            let right = self.q0_of(&jets[l + 1..], order);
            acc.add_assign(&left.mul(&mid).mul(&right));
        }
        acc
    }

    /// `(q₀ + q₁)(π_{t_i, t_j})` at `ξ`.
    pub fn q01_value(&self, i: usize, j: usize, xi: f64) -> Vec<Complex64> {
        if j == i + 1 {
            return self.slice_jet(i, xi, 0).c.remove(0);
        }
        let jets = self.slice_jets(i, j, xi, 1);
        let q0 = self.q0_of(&jets, 0);
        let q1 = self.q1_of(&jets, 0);
        q0.c[0].iter().zip(&q1.c[0]).map(|(a, b)| a + b).collect()
    }

    pub fn q0_value(&self, i: usize, j: usize, xi: f64) -> Vec<Complex64> {
        let jets = self.slice_jets(i, j, xi, 0);
        self.q0_of(&jets, 0).c.remove(0)
    }

    pub fn q1_value(&self, i: usize, j: usize, xi: f64) -> Vec<Complex64> {
        let jets = self.slice_jets(i, j, xi, 1);
        self.q1_of(&jets, 0).c.remove(0)
    }

    /// `G_m(x_i, η_j)` such that `Σ_η f(x, ξ+η) G_m(x, η)` is the Taylor term of order `m` of `f # g`.
    ///
    /// Unregularized: `G_m(x, η) = e^{ixη} η^m ĝ(η)`. Regularized: `(1/n) Σ_y e^{−iyη} χ(εy, εη) (D_x^m g)(x+y)`.
    pub fn g_matrix(&self, g: &[Complex64], m: u32) -> Vec<Vec<Complex64>> {
        let n = self.n();
        let grid = &self.grid;
        if self.opts.eps == 0.0 {
            let hat = fourier::forward(grid, g);
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let eta = grid.freq(j);
                            Complex64::from_polar(1.0, self.nodes[i] * eta) * eta.powi(m as i32) * hat[j]
                        })
                        .collect()
                })
                .collect()
        } else {
            let gm = if m == 0 { g.to_vec() } else { spectral_dx(grid, g, m) };
            let eps = self.opts.eps;
            let h = n / 2;
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let eta = grid.freq(j);
                            let mut acc = Complex64::new(0.0, 0.0);
                            for s in 0..n {
                                let y = (s as f64 - h as f64) * grid.dx();
                                let chi = (-(eps * eps) * (y * y + eta * eta)).exp();
                                acc += Complex64::from_polar(chi, -y * eta) * gm[(i + s + n - h) % n];
                            }
                            acc / n as f64
                        })
                        .collect()
                })
                .collect()
        }
    }

    /// θ-nodes on `[0,1]` for the segment `ξ + θη`, split where it crosses `ξ = 0` with a
    /// quadratic substitution that absorbs the `|ξ|^{α−2}` singularity of the ξ-derivatives.
    fn theta_rule(&self, xi: f64, eta: f64) -> Vec<(f64, f64)> {
        let (u, w) = &self.theta;
        let star = if eta != 0.0 { -xi / eta } else { -1.0 };
        if star > 0.0 && star < 1.0 {
            let mut out = Vec::with_capacity(2 * u.len());
            for (ui, wi) in u.iter().zip(w) {
                out.push((star - star * ui * ui, 2.0 * star * ui * wi));
                out.push((star + (1.0 - star) * ui * ui, 2.0 * (1.0 - star) * ui * wi));
            }
            out
        } else {
            u.iter().cloned().zip(w.iter().cloned()).collect()
        }
    }

    /// `r(π_{t_i, t_j})` at `ξ` (requires `j ≥ i + 2`).
    pub fn r_value(&self, i: usize, j: usize, xi: f64) -> Vec<Complex64> {
        assert!(j >= i + 2, "remainder needs at least two slices");
        let n = self.n();
        let last = self.slice_jet(j - 1, xi, 0).c.remove(0);
        let g1 = self.g_matrix(&last, 1);
        let g2 = self.g_matrix(&last, 2);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for jj in 0..n {
            let eta = self.grid.freq(jj);
            for (theta, w) in self.theta_rule(xi, eta) {
                let jets = self.slice_jets(i, j - 1, xi + theta * eta, 2);
                let f2 = &self.q0_of(&jets, 2).c[2];
                let f1 = &self.q1_of(&jets, 1).c[1];
                for x in 0..n {
                    out[x] += w * ((1.0 - theta) * g2[x][jj] * f2[x] + g1[x][jj] * f1[x]);
                }
            }
        }
        out
    }

    /// Columns of a symbol function on base (`extended = false`) or extended frequencies.
    pub fn columns<F: Fn(f64) -> Vec<Complex64> + Sync>(&self, extended: bool, f: F) -> Columns {
        let n = self.n() as isize;
        let (offset, count) = if extended { (-n, 2 * n) } else { (-n / 2, n) };
        let cols = par::map_range(count as usize, |c| f(self.freq_of(offset + c as isize)));
        Columns { offset, cols }
    }

    /// `f # g` with `f` on the extended lattice and `g` on the base lattice.
    pub fn compose(&self, left: &Columns, right: &Columns) -> Columns {
        let n = self.n();
        debug_assert_eq!(left.offset, -(n as isize));
        let cols = par::map_range(n, |k| {
            let g0 = self.g_matrix(&right.cols[k], 0);
            (0..n)
                .map(|x| (0..n).map(|j| left.cols[k + j][x] * g0[x][j]).sum())
                .collect()
        });
        Columns { offset: -(n as isize / 2), cols }
    }
}

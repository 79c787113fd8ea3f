//! Time-dependent symbols `a(t; x, ξ)` and their JSON specifications.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::levy::LevyTriplet;
use super::psi::{CutoffRho, Psi};
use crate::{Error, Result};

pub type SymbolFn = dyn Fn(f64, &[f64], &[f64]) -> Complex64 + Send + Sync;

/// `jet[a][b] = ∂_ξ^a ∂_x^b a(t; x, ξ)` for `a, b ≤ 2` in one dimension.
pub type Jet1d = [[Complex64; 3]; 3];
pub type JetFn = dyn Fn(f64, f64, f64) -> Option<Jet1d> + Send + Sync;

/// Spatial modulation `1 + amp·sin(freq·x₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub amp: f64,
    /// Angular frequency; use a multiple of `2π/L` to stay periodic on the torus.
    pub freq: f64,
}

impl Modulation {
    pub fn eval(&self, x: f64) -> f64 {
        1.0 + self.amp * (self.freq * x).sin()
    }

    /// `[φ, φ', φ'']` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 3] {
        let (s, c) = (self.freq * x).sin_cos();
        [1.0 + self.amp * s, self.amp * self.freq * c, -self.amp * self.freq * self.freq * s]
    }
}

/// Affine time profile `offset + slope·t` multiplying the whole symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFactor {
    #[serde(default = "one")]
    pub offset: f64,
    #[serde(default)]
    pub slope: f64,
}

fn one() -> f64 {
    1.0
}

impl TimeFactor {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.slope * t
    }

    fn is_constant(&self) -> bool {
        self.slope == 0.0
    }
}

/// An evaluatable symbol together with its claimed class data `(m, m′, g)`.
#[derive(Clone)]
pub struct TimeDependentSymbol {
    evaluator: Arc<SymbolFn>,
    jet: Option<Arc<JetFn>>,
    pub dim: usize,
    pub horizon: f64,
    pub m: f64,
    pub m_lower: f64,
    pub rho: CutoffRho,
    pub psi_ref: Psi,
    x_independent: bool,
    time_independent: bool,
}

impl fmt::Debug for TimeDependentSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentSymbol")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("m", &self.m)
            .field("m_lower", &self.m_lower)
            .field("rho", &self.rho)
            .field("psi_ref", &self.psi_ref)
            .field("x_independent", &self.x_independent)
            .field("time_independent", &self.time_independent)
            .finish()
    }
}

impl TimeDependentSymbol {
    /// Arbitrary symbol from a closure. Makes no structural claims.
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(f),
            jet: None,
            dim,
            horizon: 1.0,
            m: 2.0,
            m_lower: 0.0,
            rho: CutoffRho { g: 2 },
            psi_ref: Psi::quadratic(),
            x_independent: false,
            time_independent: false,
        }
    }

    /// The zero symbol; its evolution is the identity.
    pub fn zero(dim: usize) -> Self {
        let mut s = Self::from_fn(dim, |_, _, _| Complex64::new(0.0, 0.0));
        s.jet = Some(Arc::new(|_, _, _| Some([[Complex64::new(0.0, 0.0); 3]; 3])));
        s.x_independent = true;
        s.time_independent = true;
        s.m = 0.0;
        s
    }

    /// `a(t; x, ξ) = ψ(ξ)`.
    pub fn multiplier(psi: Psi, dim: usize) -> Result<Self> {
        Self::build(psi, None, TimeFactor { offset: 1.0, slope: 0.0 }, dim)
    }

    /// `a(t; x, ξ) = (1 + amp·sin(freq·x₁))·ψ(ξ)`.
    pub fn separable(phi: Modulation, psi: Psi, dim: usize) -> Result<Self> {
        Self::build(psi, Some(phi), TimeFactor { offset: 1.0, slope: 0.0 }, dim)
    }

    fn build(psi: Psi, phi: Option<Modulation>, tf: TimeFactor, dim: usize) -> Result<Self> {
        psi.validate()?;
        if dim == 0 || dim > 2 {
            return Err(Error::Dimension { d: dim, op: "symbol construction" });
        }
        if let Some(fd) = psi.fixed_dim() {
            if fd != dim {
                return Err(Error::InvalidSymbol(format!("ψ has dimension {fd} but the symbol has {dim}")));
            }
        }
        if let Some(p) = phi {
            if !p.amp.is_finite() || !p.freq.is_finite() || p.amp.abs() >= 1.0 {
                return Err(Error::InvalidSymbol(format!(
                    "modulation amplitude {} must satisfy |amp| < 1 to stay bounded away from 0",
                    p.amp
                )));
            }
        }
        let order = psi.order();
        let psi_e = psi.clone();
        let evaluator: Arc<SymbolFn> = match phi {
            None => Arc::new(move |t, _x, xi| tf.eval(t) * psi_e.eval(xi)),
            Some(p) => Arc::new(move |t, x, xi| tf.eval(t) * p.eval(x[0]) * psi_e.eval(xi)),
        };
        let psi_j = psi.clone();
        let jet: Option<Arc<JetFn>> = if dim == 1 && psi.derivatives_1d(1.0).is_some() {
            Some(Arc::new(move |t, x, xi| {
                let dpsi = psi_j.derivatives_1d(xi)?;
                let dphi = phi.map(|p| p.derivatives(x)).unwrap_or([1.0, 0.0, 0.0]);
                let s = tf.eval(t);
                let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        out[a][b] = Complex64::new(s * dpsi[a] * dphi[b], 0.0);
                    }
                }
                Some(out)
            }))
        } else {
            None
        };
        Ok(Self {
            evaluator,
            jet,
            dim,
            horizon: 1.0,
            m: order,
            m_lower: order,
            rho: CutoffRho { g: 2 },
            psi_ref: Psi::quadratic(),
            x_independent: phi.is_none_or(|p| p.amp == 0.0),
            time_independent: tf.is_constant(),
        })
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_orders(mut self, m: f64, m_lower: f64, g: u8) -> Result<Self> {
        if !(m <= 2.0) || !(0.0..=2.0).contains(&m_lower) {
            return Err(Error::InvalidSymbol(format!("orders must satisfy m ≤ 2, m′ ∈ [0,2]; got m={m}, m′={m_lower}")));
        }
        self.m = m;
        self.m_lower = m_lower;
        self.rho = CutoffRho::new(g)?;
        Ok(self)
    }

    pub fn with_psi_ref(mut self, psi: Psi) -> Self {
        self.psi_ref = psi;
        self
    }

    /// Declare that the closure does not depend on `x`.
    pub fn assume_x_independent(mut self) -> Self {
        self.x_independent = true;
        self
    }

    /// Declare that the closure does not depend on `t`.
    pub fn assume_time_independent(mut self) -> Self {
        self.time_independent = true;
        self
    }

    /// Remove the analytic derivative hook so that all derivatives go through finite differences.
    pub fn without_jet(mut self) -> Self {
        self.jet = None;
        self
    }

    pub fn eval(&self, t: f64, x: &[f64], xi: &[f64]) -> Complex64 {
        (self.evaluator)(t, x, xi)
    }

    pub fn eval_1d(&self, t: f64, x: f64, xi: f64) -> Complex64 {
        (self.evaluator)(t, &[x], &[xi])
    }

    /// Analytic `∂_ξ^a ∂_x^b a` table, when the built-in family provides one.
    pub fn jet_1d(&self, t: f64, x: f64, xi: f64) -> Option<Jet1d> {
        self.jet.as_ref().and_then(|j| j(t, x, xi))
    }

    pub fn has_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    /// `⟨ξ⟩` with respect to the reference `ψ`.
    pub fn bracket(&self, xi: &[f64]) -> f64 {
        super::psi::bracket(&self.psi_ref, xi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Zero,
    Multiplier,
    Separable,
    TripletMultiplier,
}

/// JSON form of a symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    #[serde(default)]
    pub psi: Option<serde_json::Value>,
    #[serde(default)]
    pub phi: Option<Modulation>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub m_lower: Option<f64>,
    #[serde(default)]
    pub g: Option<u8>,
    #[serde(default)]
    pub psi_ref: Option<Psi>,
    #[serde(default)]
    pub time_factor: Option<TimeFactor>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

impl SymbolSpec {
    pub fn build(&self, dim: usize) -> Result<TimeDependentSymbol> {
        let psi = match (self.kind, &self.psi) {
            (SymbolKind::Zero, _) => None,
            (_, None) => return Err(Error::InvalidSymbol("field `psi` is required".into())),
            (SymbolKind::TripletMultiplier, Some(v)) => {
                let t: LevyTriplet = serde_json::from_value(v.clone())?;
                t.validate()?;
                Some(Psi::Triplet(t))
            }
            (_, Some(v)) => Some(serde_json::from_value::<Psi>(v.clone())?),
        };
        let tf = self.time_factor.unwrap_or(TimeFactor { offset: 1.0, slope: 0.0 });
        let mut sym = match (self.kind, psi) {
            (SymbolKind::Zero, _) => TimeDependentSymbol::zero(dim),
            (SymbolKind::Separable, Some(psi)) => {
                let phi = self.phi.ok_or_else(|| Error::InvalidSymbol("separable symbol needs `phi`".into()))?;
                TimeDependentSymbol::build(psi, Some(phi), tf, dim)?
            }
            (_, Some(psi)) => TimeDependentSymbol::build(psi, None, tf, dim)?,
            (_, None) => unreachable!("psi presence checked above"),
        };
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidSymbol(format!("horizon {h} must be positive")));
            }
            sym = sym.with_horizon(h);
        }
        let m = self.m.unwrap_or(sym.m);
        let ml = self.m_lower.unwrap_or(sym.m_lower);
        let g = self.g.unwrap_or(sym.rho.g);
        sym = sym.with_orders(m, ml, g)?;
        if let Some(p) = &self.psi_ref {
            p.validate()?;
            sym = sym.with_psi_ref(p.clone());
        }
        Ok(sym)
    }
}

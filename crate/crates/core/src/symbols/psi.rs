//! Built-in continuous negative definite functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::levy::{eval_levy_khintchine, LevyTriplet};
use crate::Result;

fn one() -> f64 {
    1.0
}

/// A continuous negative definite function `ψ: ℝ^d → ℂ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Psi {
    /// `coef·|ξ|²`
    Quadratic {
        #[serde(default = "one")]
        coef: f64,
    },
    /// `scale·|ξ|^α`, `α ∈ (0, 2]`
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `√(mass² + |ξ|²) − mass`
    Relativistic {
        #[serde(default = "one")]
        mass: f64,
    },
    Triplet(LevyTriplet),
}

impl Psi {
    pub fn quadratic() -> Self {
        Psi::Quadratic { coef: 1.0 }
    }

    pub fn power(alpha: f64) -> Self {
        Psi::Power { alpha, scale: 1.0 }
    }

    pub fn relativistic() -> Self {
        Psi::Relativistic { mass: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::Error::InvalidSymbol;
        match self {
            Psi::Quadratic { coef } if !(*coef > 0.0 && coef.is_finite()) => {
                Err(InvalidSymbol(format!("quadratic coefficient {coef} must be positive")))
            }
            Psi::Power { alpha, scale } if !(*alpha > 0.0 && *alpha <= 2.0) || !(*scale > 0.0) => {
                Err(InvalidSymbol(format!("power ψ needs α ∈ (0,2] and scale > 0, got α={alpha}, scale={scale}")))
            }
            Psi::Relativistic { mass } if !(*mass > 0.0 && mass.is_finite()) => {
                Err(InvalidSymbol(format!("relativistic mass {mass} must be positive")))
            }
            Psi::Triplet(t) => t.validate(),
            _ => Ok(()),
        }
    }

    /// Growth order `m` with `|ψ(ξ)| ≍ |ξ|^m` at infinity.
    pub fn order(&self) -> f64 {
        match self {
            Psi::Quadratic { .. } => 2.0,
            Psi::Power { alpha, .. } => *alpha,
            Psi::Relativistic { .. } => 1.0,
            Psi::Triplet(t) => t.natural_order(),
        }
    }

    /// Dimension constraint, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Psi::Triplet(t) => Some(t.dim()),
            _ => None,
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let n2: f64 = xi.iter().map(|v| v * v).sum();
        match self {
            Psi::Quadratic { coef } => Complex64::new(coef * n2, 0.0),
            Psi::Power { alpha, scale } => Complex64::new(scale * n2.powf(0.5 * alpha), 0.0),
            Psi::Relativistic { mass } => {
                // Written as |ξ|²/(√(m²+|ξ|²)+m) to avoid cancellation near 0.
                Complex64::new(n2 / ((mass * mass + n2).sqrt() + mass), 0.0)
            }
            Psi::Triplet(t) => eval_levy_khintchine(t, xi).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
        }
    }

    /// `(ψ, ψ', ψ'')` for real radial built-ins in one dimension, where they exist.
    pub fn derivatives_1d(&self, xi: f64) -> Option<[f64; 3]> {
        let a = xi.abs();
        let s = xi.signum();
        match self {
            Psi::Quadratic { coef } => Some([coef * xi * xi, 2.0 * coef * xi, 2.0 * coef]),
            Psi::Power { alpha, scale } => {
                if a == 0.0 && *alpha < 2.0 {
                    return None;
                }
                Some([
                    scale * a.powf(*alpha),
                    scale * alpha * a.powf(alpha - 1.0) * s,
                    scale * alpha * (alpha - 1.0) * a.powf(alpha - 2.0),
                ])
            }
            Psi::Relativistic { mass } => {
                let r = (mass * mass + xi * xi).sqrt();
                Some([xi * xi / (r + mass), xi / r, mass * mass / (r * r * r)])
            }
            Psi::Triplet(_) => None,
        }
    }
}

/// `⟨ξ⟩ = (1 + |ψ(ξ)|)^{1/2}`.
pub fn bracket(psi: &Psi, xi: &[f64]) -> f64 {
    (1.0 + psi.eval(xi).norm()).sqrt()
}

/// Cut-off `ρ_g(k) = min(k, g)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoffRho {
    pub g: u8,
}

impl CutoffRho {
    pub fn new(g: u8) -> crate::Result<Self> {
        if g > 2 {
            return Err(crate::Error::InvalidArgument(format!("cut-off level g = {g} must be in {{0,1,2}}")));
        }
        Ok(Self { g })
    }

    pub fn eval(&self, k: usize) -> usize {
        k.min(self.g as usize)
    }
}

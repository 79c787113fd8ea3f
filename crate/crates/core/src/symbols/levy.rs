//! Lévy–Khintchine triplets and their characteristic exponents.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single atom `w · δ_y` of a finite Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: Vec<f64>,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyMeasure {
    Empty,
    Atoms { atoms: Vec<Atom> },
    /// Symmetric α-stable jump measure in one dimension, exponent `scale·|ξ|^α`.
    Stable1d { alpha: f64, scale: f64 },
}

impl LevyMeasure {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            LevyMeasure::Empty => Ok(()),
            LevyMeasure::Atoms { atoms } => {
                let mut mass = 0.0;
                for (j, a) in atoms.iter().enumerate() {
                    if a.y.len() != d {
                        return Err(Error::InvalidTriplet(format!(
                            "atom {j} has dimension {} but triplet has {d}",
                            a.y.len()
                        )));
                    }
                    let n2: f64 = a.y.iter().map(|v| v * v).sum();
                    if !(n2 > 0.0) || !n2.is_finite() {
                        return Err(Error::InvalidTriplet(format!("atom {j} sits at the origin or is non-finite")));
                    }
                    if !(a.w > 0.0) || !a.w.is_finite() {
                        return Err(Error::InvalidTriplet(format!("atom {j} has non-positive weight {}", a.w)));
                    }
                    mass += a.w * n2.min(1.0);
                }
                if !mass.is_finite() {
                    return Err(Error::InvalidTriplet("atomic Lévy measure is not integrable".into()));
                }
                Ok(())
            }
            LevyMeasure::Stable1d { alpha, scale } => {
                if d != 1 {
                    return Err(Error::InvalidTriplet("stable1d measure requires d = 1".into()));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::InvalidTriplet(format!("stable index {alpha} outside (0, 2)")));
                }
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidTriplet(format!("stable scale {scale} must be positive")));
                }
                Ok(())
            }
        }
    }
}

/// `(c, l, Q, ν)`: killing rate, drift, diffusion matrix and jump measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    #[serde(default)]
    pub c: f64,
    pub l: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(default = "empty_measure")]
    pub nu: LevyMeasure,
}

fn empty_measure() -> LevyMeasure {
    LevyMeasure::Empty
}

impl LevyTriplet {
    pub fn new(c: f64, l: Vec<f64>, q: Vec<Vec<f64>>, nu: LevyMeasure) -> Result<Self> {
        let t = Self { c, l, q, nu };
        t.validate()?;
        Ok(t)
    }

    /// Pure diffusion `½ ξ·Qξ` with `Q = 2·coef·I`, i.e. `coef·|ξ|²`.
    pub fn brownian(d: usize, coef: f64) -> Self {
        let q = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 2.0 * coef } else { 0.0 }).collect())
            .collect();
        Self { c: 0.0, l: vec![0.0; d], q, nu: LevyMeasure::Empty }
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.l.len();
        if d == 0 {
            return Err(Error::InvalidTriplet("dimension must be positive".into()));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidTriplet(format!("killing rate c = {} must be ≥ 0", self.c)));
        }
        if self.l.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTriplet("drift has non-finite entries".into()));
        }
        if self.q.len() != d || self.q.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidTriplet(format!("Q must be {d}×{d}")));
        }
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (self.q[i][j], self.q[j][i]);
                if !a.is_finite() {
                    return Err(Error::InvalidTriplet("Q has non-finite entries".into()));
                }
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidTriplet(format!("Q is not symmetric at ({i},{j})")));
                }
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| self.q[i][j]);
        let min_eig = m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 {
            return Err(Error::InvalidTriplet(format!("Q has negative eigenvalue {min_eig:.3e}")));
        }
        self.nu.validate(d)
    }

    /// Highest growth order of the exponent: 2 with diffusion, α for stable jumps, 0 otherwise.
    pub fn natural_order(&self) -> f64 {
        let has_q = self.q.iter().flatten().any(|v| *v != 0.0);
        if has_q {
            return 2.0;
        }
        let drift = if self.l.iter().any(|v| *v != 0.0) { 1.0 } else { 0.0 };
        match self.nu {
            LevyMeasure::Stable1d { alpha, .. } => f64::max(alpha, drift),
            _ => drift,
        }
    }
}

/// `ψ(ξ) = c + i l·ξ + ½ ξ·Qξ + ∫ (1 − e^{iξ·y} + iξ·y/(1+|y|²)) ν(dy)`.
pub fn eval_levy_khintchine(triplet: &LevyTriplet, xi: &[f64]) -> Result<Complex64> {
    let d = triplet.dim();
    if xi.len() != d {
        return Err(Error::InvalidArgument(format!("ξ has dimension {} but triplet has {d}", xi.len())));
    }
    let killing = Complex64::new(triplet.c, 0.0);
    let drift: f64 = triplet.l.iter().zip(xi).map(|(l, x)| l * x).sum();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += xi[i] * triplet.q[i][j] * xi[j];
        }
    }
    let quad = 0.5 * quad;
    let jump = match &triplet.nu {
        LevyMeasure::Empty => Complex64::new(0.0, 0.0),
        LevyMeasure::Atoms { atoms } => atoms
            .iter()
            .map(|a| {
                let dot: f64 = a.y.iter().zip(xi).map(|(y, x)| y * x).sum();
                let n2: f64 = a.y.iter().map(|v| v * v).sum();
                let re = 1.0 - dot.cos();
                let im = -dot.sin() + dot / (1.0 + n2);
                a.w * Complex64::new(re, im)
            })
            .sum(),
        LevyMeasure::Stable1d { alpha, scale } => Complex64::new(scale * xi[0].abs().powf(*alpha), 0.0),
    };
    let check = |term: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::NonFiniteExponent { term, xi: xi.to_vec() })
        }
    };
    check("drift", drift.is_finite())?;
    check("diffusion", quad.is_finite())?;
    check("jump", jump.re.is_finite() && jump.im.is_finite())?;
    let total = killing + Complex64::new(quad, drift) + jump;
    check("total", total.re.is_finite() && total.im.is_finite())?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_with_q_two_identity_is_squared_norm() {
        let t = LevyTriplet::brownian(2, 1.0);
        let v = eval_levy_khintchine(&t, &[1.5, -2.0]).unwrap();
        assert!((v.re - 6.25).abs() < 1e-14 && v.im == 0.0);
    }

    #[test]
    fn pure_killing_is_constant() {
        let t = LevyTriplet::new(1.0, vec![0.0], vec![vec![0.0]], LevyMeasure::Empty).unwrap();
        for xi in [-3.0, 0.0, 7.5] {
            assert_eq!(eval_levy_khintchine(&t, &[xi]).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn single_atom_real_part_and_origin() {
        let nu = LevyMeasure::Atoms { atoms: vec![Atom { y: vec![1.0], w: 1.0 }] };
        let t = LevyTriplet::new(0.0, vec![0.0], vec![vec![0.0]], nu).unwrap();
        let v = eval_levy_khintchine(&t, &[std::f64::consts::PI]).unwrap();
        assert!((v.re - 2.0).abs() < 1e-14);
        assert_eq!(eval_levy_khintchine(&t, &[0.0]).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn value_at_origin_is_killing_rate() {
        let nu = LevyMeasure::Atoms { atoms: vec![Atom { y: vec![0.3, -1.0], w: 2.0 }] };
        let t = LevyTriplet::new(0.25, vec![1.0, 2.0], vec![vec![1.0, 0.2], vec![0.2, 1.0]], nu).unwrap();
        assert_eq!(eval_levy_khintchine(&t, &[0.0, 0.0]).unwrap(), Complex64::new(0.25, 0.0));
    }

    #[test]
    fn rejects_invalid_triplets() {
        assert!(LevyTriplet::new(-1.0, vec![0.0], vec![vec![0.0]], LevyMeasure::Empty).is_err());
        assert!(LevyTriplet::new(0.0, vec![0.0], vec![vec![-1.0]], LevyMeasure::Empty).is_err());
        assert!(LevyTriplet::new(0.0, vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.0, 1.0]], LevyMeasure::Empty).is_err());
        let atom0 = LevyMeasure::Atoms { atoms: vec![Atom { y: vec![0.0], w: 1.0 }] };
        assert!(LevyTriplet::new(0.0, vec![0.0], vec![vec![0.0]], atom0).is_err());
        let neg = LevyMeasure::Atoms { atoms: vec![Atom { y: vec![1.0], w: -1.0 }] };
        assert!(LevyTriplet::new(0.0, vec![0.0], vec![vec![0.0]], neg).is_err());
        let st = LevyMeasure::Stable1d { alpha: 2.0, scale: 1.0 };
        assert!(LevyTriplet::new(0.0, vec![0.0], vec![vec![0.0]], st).is_err());
    }

    #[test]
    fn overflow_names_the_term() {
        let t = LevyTriplet::new(0.0, vec![1e300], vec![vec![1e300]], LevyMeasure::Empty).unwrap();
        match eval_levy_khintchine(&t, &[1e300]) {
            Err(Error::NonFiniteExponent { term, .. }) => assert_eq!(term, "drift"),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Numerical spot-checks of negative-definiteness inequalities and symbol-class membership.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fd::{multi_indices, partial};
use super::symbol::TimeDependentSymbol;
use crate::{par, Error, Result};

/// Where a check attained its extreme value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
    pub constant: f64,
    pub witness: Option<Witness>,
}

impl CheckResult {
    fn new(check: &str, passed: bool, constant: f64, witness: Option<Witness>) -> Self {
        Self { check: check.to_string(), passed, constant, witness }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NdfOptions {
    /// Number of distinct frequencies used for the conditional-negative-definiteness matrix.
    pub cnd_points: usize,
    pub cnd_tol: f64,
}

impl Default for NdfOptions {
    fn default() -> Self {
        Self { cnd_points: 24, cnd_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NdfReport {
    pub samples: usize,
    pub peetre: CheckResult,
    pub growth: CheckResult,
    /// Growth constant on the doubled sample box.
    pub growth_doubled: f64,
    pub c0: CheckResult,
    pub cnd: CheckResult,
}

impl NdfReport {
    pub fn passed(&self) -> bool {
        self.peetre.passed && self.growth.passed && self.c0.passed && self.cnd.passed
    }

    pub fn checks(&self) -> [&CheckResult; 4] {
        [&self.peetre, &self.growth, &self.c0, &self.cnd]
    }
}

/// Uniform random frequency pairs in `[−radius, radius]^d`.
pub fn random_sample_pairs(d: usize, count: usize, radius: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
            let b = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
            (a, b)
        })
        .collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Peetre ratio, growth constant, the `c₀` neighbourhood estimate and conditional negative
/// definiteness of `ψ` on the given sample pairs `(ξ, η)`.
pub fn verify_ndf_properties<F>(psi: F, samples: &[(Vec<f64>, Vec<f64>)], opts: &NdfOptions) -> Result<NdfReport>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if samples.is_empty() {
        return Err(Error::InvalidArgument("sample list is empty".into()));
    }
    let d = samples[0].0.len();
    let psi0 = psi(&vec![0.0; d]);
    if !(psi0.re.is_finite() && psi0.im.is_finite()) {
        return Err(Error::NonFinite("ψ(0)"));
    }
    let br = |v: &[f64]| (1.0 + psi(v).norm()).sqrt();

    // (i) Peetre and (iii) c₀, per pair.
    let per_pair = par::map_range(samples.len(), |i| {
        let (xi, eta) = &samples[i];
        let ratio = (1.0 + psi(xi).norm()) / ((1.0 + psi(eta).norm()) * (1.0 + psi(&sub(xi, eta)).norm()));
        let bx = br(xi);
        let bxe = br(&add(xi, eta));
        let within = bxe >= 0.5 * bx && bxe <= 2.0 * bx;
        let r = norm2(eta).sqrt() / bx;
        (ratio, within, r)
    });
    let (mut peetre_max, mut peetre_at) = (f64::NEG_INFINITY, 0);
    let mut c0_violation = f64::INFINITY;
    let mut c0_violation_at = None;
    let mut r_max: f64 = 0.0;
    for (i, (ratio, within, r)) in per_pair.iter().enumerate() {
        if *ratio > peetre_max || ratio.is_nan() {
            peetre_max = *ratio;
            peetre_at = i;
        }
        if !within && *r < c0_violation {
            c0_violation = *r;
            c0_violation_at = Some(i);
        }
        r_max = r_max.max(*r);
    }
    let pair_witness = |i: usize| Witness {
        xi: Some(samples[i].0.clone()),
        eta: Some(samples[i].1.clone()),
        ..Default::default()
    };
    let peetre = CheckResult::new(
        "peetre",
        peetre_max <= 2.0 * (1.0 + 1e-12),
        peetre_max,
        Some(pair_witness(peetre_at)),
    );
    let c0 = match c0_violation_at {
        Some(i) => {
            let c = c0_violation * (1.0 - 1e-12);
            CheckResult::new("c0", c > 0.0, c, Some(pair_witness(i)))
        }
        None => CheckResult::new(
            "c0",
            r_max > 0.0,
            r_max,
            Some(Witness { note: Some("no violation on samples; constant is the largest tested ratio".into()), ..Default::default() }),
        ),
    };

    // (ii) growth on the box and on the doubled box.
    let growth_on = |scale: f64| {
        let vals = par::map_range(samples.len(), |i| {
            let (xi, eta) = &samples[i];
            let g = |v: &[f64]| {
                let s: Vec<f64> = v.iter().map(|c| c * scale).collect();
                (psi(&s).norm() / (1.0 + norm2(&s)), s)
            };
            let (a, sa) = g(xi);
            let (b, sb) = g(eta);
            if a >= b { (a, sa) } else { (b, sb) }
        });
        vals.into_iter().fold((f64::NEG_INFINITY, vec![]), |acc, v| if v.0 > acc.0 { v } else { acc })
    };
    let (g1, g1_at) = growth_on(1.0);
    let (g2, _) = growth_on(2.0);
    let growth = CheckResult::new(
        "growth",
        g1.is_finite() && (g2 - g1).abs() <= 0.1 * g1.abs().max(f64::MIN_POSITIVE),
        g1,
        Some(Witness { xi: Some(g1_at), ..Default::default() }),
    );

    // (iv) conditional negative definiteness.
    let mut pts: Vec<Vec<f64>> = vec![];
    for (xi, eta) in samples {
        for v in [xi, eta] {
            if pts.len() < opts.cnd_points && !pts.iter().any(|p| p == v) {
                pts.push(v.clone());
            }
        }
    }
    let n = pts.len();
    let vals: Vec<Complex64> = pts.iter().map(|p| psi(p)).collect();
    let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let m = vals[i] + vals[j].conj() - psi(&sub(&pts[i], &pts[j]));
            big[(i, j)] = m.re;
            big[(i + n, j + n)] = m.re;
            big[(i, j + n)] = -m.im;
            big[(i + n, j)] = m.im;
        }
    }
    // Symmetrize against round-off; for an ndf the matrix is Hermitian.
    let herm_defect = (&big - big.transpose()).abs().max();
    let sym = (&big + big.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_abs = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let cnd_ok = min_eig >= -opts.cnd_tol * max_abs && herm_defect <= opts.cnd_tol * max_abs;
    let cnd = CheckResult::new(
        "conditionally_negative_definite",
        cnd_ok,
        min_eig,
        Some(Witness { note: Some(format!("checked on {n} points; hermitian defect {herm_defect:.2e}")), ..Default::default() }),
    );

    Ok(NdfReport { samples: samples.len(), peetre, growth, growth_doubled: g2, c0, cnd })
}

/// Product set of sample positions and frequencies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleBox {
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
}

impl SampleBox {
    pub fn new(x: Vec<Vec<f64>>, xi: Vec<Vec<f64>>) -> Self {
        Self { x, xi }
    }

    /// One-dimensional box from coordinate lists.
    pub fn line(x: &[f64], xi: &[f64]) -> Self {
        Self { x: x.iter().map(|v| vec![*v]).collect(), xi: xi.iter().map(|v| vec![*v]).collect() }
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub value_half_step: f64,
    pub witness: Witness,
    pub warning: Option<String>,
}

fn derivative_modulus(a: &TimeDependentSymbol, t: f64, x: &[f64], xi: &[f64], alpha: &[usize], beta: &[usize], step: f64) -> f64 {
    let d = x.len();
    let f = |z: &[f64]| a.eval(t, &z[..d], &z[d..]);
    let point: Vec<f64> = x.iter().chain(xi).cloned().collect();
    let orders: Vec<usize> = beta.iter().chain(alpha).cloned().collect();
    // |D_x^β| = |∂_x^β|
    partial(&f, &point, &orders, step).norm()
}

fn seminorm_once(
    a: &TimeDependentSymbol,
    t: f64,
    l: usize,
    lp: usize,
    m: f64,
    rho: super::psi::CutoffRho,
    sample: &SampleBox,
    step: f64,
) -> (f64, Witness) {
    let d = a.dim;
    let alphas = multi_indices(d, l);
    let betas = multi_indices(d, lp);
    let nx = sample.x.len();
    let per = par::map_range(nx * sample.xi.len(), |idx| {
        let (x, xi) = (&sample.x[idx / sample.xi.len()], &sample.xi[idx % sample.xi.len()]);
        let br = a.bracket(xi);
        let mut best = f64::NEG_INFINITY;
        for al in &alphas {
            let weight = br.powf(-m + rho.eval(al.iter().sum()) as f64);
            for be in &betas {
                let v = derivative_modulus(a, t, x, xi, al, be, step) * weight;
                if v > best || v.is_nan() {
                    best = v;
                }
            }
        }
        best
    });
    let (i, v) = per
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 || v.is_nan() { (i, *v) } else { acc });
    let w = Witness {
        t: Some(t),
        x: Some(sample.x[i / sample.xi.len()].clone()),
        xi: Some(sample.xi[i % sample.xi.len()].clone()),
        ..Default::default()
    };
    (v, w)
}

/// `max_{|α|≤l, |β|≤l′} |∂_ξ^α D_x^β a(t;x,ξ)| ⟨ξ⟩^{−m+ρ_g(|α|)}` over the sample box.
#[allow(clippy::too_many_arguments)]
pub fn estimate_seminorm(
    a: &TimeDependentSymbol,
    t: f64,
    l: usize,
    l_prime: usize,
    m: f64,
    g: u8,
    sample: &SampleBox,
    fd_step: f64,
) -> Result<SeminormEstimate> {
    if l > 4 || l_prime > 4 {
        return Err(Error::InvalidArgument(format!("derivative orders (l, l′) = ({l}, {l_prime}) exceed 4")));
    }
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument(format!("fd_step {fd_step} must be positive")));
    }
    if sample.x.is_empty() || sample.xi.is_empty() {
        return Err(Error::InvalidArgument("sample box is empty".into()));
    }
    let rho = super::psi::CutoffRho::new(g)?;
    let (value, witness) = seminorm_once(a, t, l, l_prime, m, rho, sample, fd_step);
    let (half, _) = seminorm_once(a, t, l, l_prime, m, rho, sample, 0.5 * fd_step);
    let warning = if (value - half).abs() > 0.1 * value.abs().max(half.abs()) {
        Some(format!("finite-difference cancellation: step halving changed the estimate from {value:.4e} to {half:.4e}"))
    } else {
        None
    };
    Ok(SeminormEstimate { value, value_half_step: half, witness, warning })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplePlan {
    pub times: Vec<f64>,
    pub sample: SampleBox,
    pub l: usize,
    pub l_prime: usize,
    pub fd_step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub a1: CheckResult,
    pub a2: CheckResult,
    pub a3: CheckResult,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.a1.passed && self.a2.passed && self.a3.passed
    }

    pub fn checks(&self) -> [&CheckResult; 3] {
        [&self.a1, &self.a2, &self.a3]
    }
}

/// Seminorm finiteness, ellipticity `Re a ≥ c⟨ξ⟩^{m′}` and the derivative-to-real-part ratio bound.
pub fn check_assumptions(a: &TimeDependentSymbol, plan: &SamplePlan) -> Result<AssumptionReport> {
    if plan.times.is_empty() {
        return Err(Error::InvalidArgument("sample plan has no times".into()));
    }
    let mut warnings = vec![];

    let mut a1_val = f64::NEG_INFINITY;
    let mut a1_w = None;
    for &t in &plan.times {
        let est = estimate_seminorm(a, t, plan.l, plan.l_prime, a.m, a.rho.g, &plan.sample, plan.fd_step)?;
        if let Some(w) = est.warning {
            warnings.push(format!("t={t}: {w}"));
        }
        if est.value > a1_val || est.value.is_nan() {
            a1_val = est.value;
            a1_w = Some(est.witness);
        }
    }
    let a1 = CheckResult::new("A1_seminorm", a1_val.is_finite(), a1_val, a1_w);

    let d = a.dim;
    let mut a2_min = f64::INFINITY;
    let mut a2_w = None;
    let mut a3_max: f64 = 0.0;
    let mut a3_w = None;
    let alphas = multi_indices(d, 2);
    for &t in &plan.times {
        for x in &plan.sample.x {
            for xi in &plan.sample.xi {
                if norm2(xi) == 0.0 {
                    continue;
                }
                let re = a.eval(t, x, xi).re;
                let br = a.bracket(xi);
                let r2 = re / br.powf(a.m_lower);
                let here = || Witness { t: Some(t), x: Some(x.clone()), xi: Some(xi.clone()), ..Default::default() };
                if r2 < a2_min || r2.is_nan() {
                    a2_min = r2;
                    a2_w = Some(here());
                }
                if !(re > 0.0) {
                    continue;
                }
                for al in &alphas {
                    let w = br.powf(-(al.iter().sum::<usize>().min(2) as f64));
                    for be in &alphas {
                        let v = derivative_modulus(a, t, x, xi, al, be, plan.fd_step) / (re * w);
                        if v > a3_max || v.is_nan() {
                            a3_max = v;
                            a3_w = Some(here());
                        }
                    }
                }
            }
        }
    }
    if a2_w.is_none() {
        return Err(Error::InvalidArgument("sample plan has no nonzero frequencies".into()));
    }
    let a2 = CheckResult::new("A2_ellipticity", a2_min > 0.0, a2_min, a2_w);
    let a3 = CheckResult::new("A3_derivative_ratio", a3_max.is_finite() && a2_min > 0.0, a3_max, a3_w);
    Ok(AssumptionReport { a1, a2, a3, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{Modulation, Psi};

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn peetre_ratio_for_absolute_value() {
        let psi = |v: &[f64]| c(v[0].abs());
        let r = verify_ndf_properties(psi, &[(vec![2.0], vec![1.0])], &NdfOptions::default()).unwrap();
        assert!((r.peetre.constant - 0.75).abs() < 1e-14);
        assert!(r.peetre.passed);
    }

    #[test]
    fn coincident_points_give_ratio_at_most_one() {
        let psi = |v: &[f64]| c(norm2(v));
        let s: Vec<_> = linspace(-5.0, 5.0, 11).into_iter().map(|v| (vec![v], vec![v])).collect();
        let r = verify_ndf_properties(psi, &s, &NdfOptions::default()).unwrap();
        assert!(r.peetre.constant <= 1.0 + 1e-15);
    }

    #[test]
    fn quadratic_growth_constant_is_below_one() {
        let psi = |v: &[f64]| c(norm2(v));
        let s = random_sample_pairs(1, 2000, 20.0, 3);
        let r = verify_ndf_properties(psi, &s, &NdfOptions::default()).unwrap();
        assert!(r.growth.constant < 1.0 && r.growth.constant > 0.99);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn non_ndf_is_flagged() {
        // |ξ|⁴ is not negative definite and violates Peetre's inequality.
        let psi = |v: &[f64]| c(norm2(v).powi(2));
        let s = random_sample_pairs(1, 500, 10.0, 1);
        let r = verify_ndf_properties(psi, &s, &NdfOptions::default()).unwrap();
        assert!(!r.peetre.passed);
        assert!(!r.cnd.passed);
        assert!(!r.growth.passed);
    }

    #[test]
    fn seminorm_trivial_cases() {
        let a = TimeDependentSymbol::from_fn(1, |_, _, xi| c(1.0 + xi[0] * xi[0]));
        let b = SampleBox::line(&[0.0, 1.0], &linspace(-10.0, 10.0, 21));
        let e = estimate_seminorm(&a, 0.0, 0, 0, 2.0, 2, &b, 1e-4).unwrap();
        assert!((e.value - 1.0).abs() < 1e-8);

        let one = TimeDependentSymbol::from_fn(1, |_, _, _| c(1.0));
        let e = estimate_seminorm(&one, 0.0, 3, 3, 0.0, 2, &b, 1e-4).unwrap();
        assert!((e.value - 1.0).abs() < 1e-6, "{}", e.value);
    }

    #[test]
    fn modulated_stable_seminorm_is_step_stable() {
        let a = TimeDependentSymbol::from_fn(1, |_, x, xi| c((1.0 + 0.5 * x[0].sin()) * xi[0].abs().powf(1.5)));
        let b = SampleBox::line(&linspace(-3.0, 3.0, 7), &linspace(-8.0, 8.0, 32));
        let e = estimate_seminorm(&a, 0.0, 2, 2, 1.5, 2, &b, 1e-4).unwrap();
        assert!(e.value.is_finite());
        assert!((e.value - e.value_half_step).abs() <= 0.05 * e.value, "{e:?}");
        assert!(e.warning.is_none());
    }

    #[test]
    fn assumptions_quadratic_and_modulated() {
        let plan = SamplePlan {
            times: vec![0.0],
            sample: SampleBox::line(&linspace(-3.0, 3.0, 5), &linspace(-8.0, 8.0, 32)),
            l: 2,
            l_prime: 2,
            fd_step: 1e-4,
        };
        let heat = TimeDependentSymbol::multiplier(Psi::quadratic(), 1).unwrap();
        let r = check_assumptions(&heat, &plan).unwrap();
        assert!(r.passed());
        // |ξ|²/(1+|ξ|²) ≥ 1/2 where |ξ| ≥ 1; the smallest sample here is |ξ| = 8/31.
        let min_expected = (8.0f64 / 31.0).powi(2) / (1.0 + (8.0f64 / 31.0).powi(2));
        assert!((r.a2.constant - min_expected).abs() < 1e-12);

        let shifted = TimeDependentSymbol::from_fn(1, |_, _, xi| c(1.0 + xi[0] * xi[0]))
            .with_orders(2.0, 2.0, 2)
            .unwrap();
        let r = check_assumptions(&shifted, &plan).unwrap();
        assert!((r.a2.constant - 1.0).abs() < 1e-12);

        let modulated = TimeDependentSymbol::from_fn(1, |_, x, xi| c((1.0 + 0.5 * x[0].sin()) * (1.0 + xi[0].abs().powf(1.5))))
            .with_orders(1.5, 1.5, 2)
            .unwrap();
        let r = check_assumptions(&modulated, &plan).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.a1.constant.is_finite() && r.a3.constant.is_finite());

        let sep = TimeDependentSymbol::separable(Modulation { amp: 0.5, freq: 1.0 }, Psi::power(1.5), 1).unwrap();
        assert!(check_assumptions(&sep, &plan).unwrap().passed());
    }

    #[test]
    fn negative_real_part_fails_a2() {
        let plan = SamplePlan {
            times: vec![0.0],
            sample: SampleBox::line(&[0.0], &[-1.0, 1.0]),
            l: 0,
            l_prime: 0,
            fd_step: 1e-4,
        };
        let bad = TimeDependentSymbol::from_fn(1, |_, _, xi| c(-xi[0] * xi[0]));
        let r = check_assumptions(&bad, &plan).unwrap();
        assert!(!r.a2.passed);
        assert!(r.a2.witness.is_some());
    }
}

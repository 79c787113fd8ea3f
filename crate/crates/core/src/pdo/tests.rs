use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::symbols::{Modulation, Psi, TimeDependentSymbol};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(1, n, 20.0).unwrap()
}

/// Smooth, essentially band-limited test function.
fn bump(g: TorusGrid) -> GridFunction {
    GridFunction::from_fn(g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.3 * (-(x[0] - 1.0).powi(2)).exp()))
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

#[test]
fn identity_symbol_is_identity() {
    for n in [64, 128, 256] {
        let g = grid(n);
        let u = GridFunction::from_fn(g, |x| Complex64::new(x[0].sin() * (-x[0] * x[0]).exp(), x[0].cos()));
        let v = apply_pdo(&DiscreteSymbol::one(g), &u).unwrap();
        assert!(max_diff(&u.values, &v.values) <= 1e-13);
        let full = apply_pdo(&DiscreteSymbol::one(g).into_full(), &u).unwrap();
        assert!(max_diff(&u.values, &full.values) <= 1e-12);
    }
}

#[test]
fn identity_on_two_dimensional_grid() {
    let g = TorusGrid::new(2, 16, 20.0).unwrap();
    let u = GridFunction::gaussian(g, 1.0, &[0.5, -0.5]);
    let v = apply_pdo(&DiscreteSymbol::one(g).into_full(), &u).unwrap();
    assert!(max_diff(&u.values, &v.values) <= 1e-13);
}

#[test]
fn derivative_of_lattice_sine() {
    let g = grid(64);
    let w = 2.0 * PI / g.l * 3.0;
    let u = GridFunction::from_fn(g, |x| c((w * x[0]).sin()));
    let dx = DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(0.0, xi[0]));
    let v = apply_pdo(&dx, &u).unwrap();
    for (i, val) in v.values.iter().enumerate() {
        assert!((val - c(w * (w * g.node(i)).cos())).norm() < 1e-10);
    }
    let v_full = apply_pdo(&dx.into_full(), &u).unwrap();
    assert!(max_diff(&v.values, &v_full.values) < 1e-10);
}

#[test]
fn first_order_variable_coefficient_symbol_is_derivative_of_product() {
    // Op(b·iξ + b') u = (b u)'
    let g = grid(128);
    let w = 2.0 * PI / g.l;
    let b = |x: f64| 2.0 + (w * x).sin();
    let db = |x: f64| w * (w * x).cos();
    let sym = DiscreteSymbol::from_fn(g, |x, xi| Complex64::new(db(x[0]), b(x[0]) * xi[0]));
    let u = bump(g);
    let lhs = apply_pdo(&sym, &u).unwrap();
    let bu = GridFunction::from_fn(g, |x| c(b(x[0])) * u.values[g.nearest_index(x)]);
    let rhs = apply_pdo(&DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(0.0, xi[0])), &bu).unwrap();
    assert!(max_diff(&lhs.values, &rhs.values) < 1e-8);
}

#[test]
fn frozen_exponential_examples() {
    let g = grid(64);
    let heat = TimeDependentSymbol::multiplier(Psi::quadratic(), 1).unwrap();
    let p = frozen_exp_symbol(&heat, 0.2, 0.7, &g, 4).unwrap();
    for k in 0..g.n {
        let xi = g.freq(k);
        assert!((p.get(0, k) - c((-0.5 * xi * xi).exp())).norm() <= 1e-14);
    }
    assert_eq!(frozen_exp_symbol(&heat, 0.3, 0.3, &g, 4).unwrap(), DiscreteSymbol::one(g));

    let ramp = TimeDependentSymbol::from_fn(1, |t, _, xi| c(t * xi[0] * xi[0])).assume_x_independent();
    let p = frozen_exp_symbol(&ramp, 0.0, 1.0, &g, 2).unwrap();
    for k in 0..g.n {
        let xi = g.freq(k);
        assert!((p.get(0, k) - c((-0.5 * xi * xi).exp())).norm() <= 1e-12);
    }
}

#[test]
fn frozen_exponential_is_contractive_for_elliptic_symbols() {
    let g = grid(64);
    let a = TimeDependentSymbol::separable(Modulation { amp: 0.5, freq: 2.0 * PI / 20.0 }, Psi::power(1.5), 1).unwrap();
    let p = frozen_exp_symbol(&a, 0.0, 0.3, &g, 4).unwrap();
    assert!(p.sup_norm() <= 1.0 + 1e-12);
}

#[test]
fn frozen_exponential_overflow_names_witness() {
    let g = grid(16);
    let bad = TimeDependentSymbol::from_fn(1, |_, _, xi| c(-1e3 * (1.0 + xi[0] * xi[0])));
    match frozen_exp_symbol(&bad, 0.0, 1.0, &g, 2) {
        Err(crate::Error::Overflow { x, xi, .. }) => assert_eq!((x.len(), xi.len()), (1, 1)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn multipliers_compose_by_multiplication() {
    let g = grid(32);
    let a1 = DiscreteSymbol::multiplier_from_fn(g, |xi| c(xi[0].abs().powf(1.5)));
    let a2 = DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(1.0, xi[0]));
    let b = compose_kn(&a1, &a2, 0.0).unwrap();
    let prod = a1.zip_with(&a2, |p, q| p * q).unwrap();
    assert!(b.sub(&prod).unwrap().sup_norm() <= 1e-10);
    let b_full = compose_kn(&a1.clone().into_full(), &a2.clone().into_full(), 0.0).unwrap();
    assert!(b_full.sub(&prod).unwrap().sup_norm() <= 1e-10);
}

#[test]
fn leibniz_rule_for_first_order_symbol() {
    let g = grid(32);
    let w = 2.0 * PI / g.l;
    let a1 = DiscreteSymbol::multiplier_from_fn(g, |xi| Complex64::new(0.0, xi[0]));
    let a2 = DiscreteSymbol::from_fn(g, |x, _| c(2.0 + (w * x[0]).sin()));
    let b = compose_kn(&a1, &a2, 0.0).unwrap();
    // b(x)·iξ + b'(x), compared where ξ ± w stays on the lattice without wrapping.
    for i in 0..g.n {
        let x = g.node(i);
        for k in 1..g.n - 1 {
            let expect = Complex64::new(w * (w * x).cos(), (2.0 + (w * x).sin()) * g.freq(k));
            assert!((b.get(i, k) - expect).norm() <= 1e-6, "i={i} k={k}");
        }
    }
}

fn smooth_pair(g: TorusGrid) -> (DiscreteSymbol, DiscreteSymbol) {
    let w = 2.0 * PI / g.l;
    let a1 = DiscreteSymbol::from_fn(g, move |x, xi| c((1.0 + 0.5 * (w * x[0]).sin()) * (-0.1 * xi[0] * xi[0]).exp()));
    let a2 = DiscreteSymbol::from_fn(g, move |x, xi| Complex64::new(1.0 + 0.3 * (2.0 * w * x[0]).cos(), 0.2 * xi[0]));
    (a1, a2)
}

#[test]
fn composition_matches_operator_product() {
    let g = grid(64);
    let (a1, a2) = smooth_pair(g);
    let u = bump(g);
    let b = compose_kn(&a1, &a2, 0.0).unwrap();
    let lhs = apply_pdo(&b, &u).unwrap();
    let rhs = apply_pdo(&a1, &apply_pdo(&a2, &u).unwrap()).unwrap();
    assert!(lhs.sub(&rhs).unwrap().l2_norm() / u.l2_norm() <= 1e-10);
}

#[test]
fn regularized_composition_converges_as_cutoff_vanishes() {
    let g = grid(32);
    let (a1, a2) = smooth_pair(g);
    let exact = compose_kn(&a1, &a2, 0.0).unwrap();
    let (b, rep) = compose_kn_checked(&a1, &a2, 1e-3).unwrap();
    let err = b.sub(&exact).unwrap().sup_norm();
    assert!(err < 1e-3, "{err}");
    assert!(rep.halving_change < err);
    let (b2, _) = compose_kn_checked(&a1, &a2, 5e-4).unwrap();
    let err2 = b2.sub(&exact).unwrap().sup_norm();
    assert!(err2 < 0.3 * err, "{err2} vs {err}");
}

#[test]
fn compose_rejects_two_dimensional_grids() {
    let g = TorusGrid::new(2, 8, 20.0).unwrap();
    let one = DiscreteSymbol::one(g);
    assert!(matches!(compose_kn(&one, &one, 0.0), Err(crate::Error::Dimension { .. })));
}

#[test]
fn sobolev_norm_examples() {
    let g = grid(128);
    let u = bump(g);
    let s0 = psi_sobolev_norm(&u, |_| c(0.0), 0.0).unwrap();
    assert!((s0 - u.l2_norm()).abs() <= 1e-12 * s0);

    let k = 5;
    let xi_k = g.freq(k + g.n / 2);
    let mode = GridFunction::from_fn(g, |x| Complex64::from_polar(1.0, xi_k * x[0]));
    let sq = |xi: &[f64]| c(xi[0] * xi[0]);
    let v = psi_sobolev_norm(&mode, sq, 1.5).unwrap();
    assert!((v - (1.0 + xi_k * xi_k).powf(0.75) * g.l.sqrt()).abs() <= 1e-10 * v);

    let v2 = psi_sobolev_norm(&u, sq, 2.0).unwrap();
    let lifted = apply_pdo(&DiscreteSymbol::multiplier_from_fn(g, |xi| c(1.0 + xi[0] * xi[0])), &u).unwrap();
    assert!((v2 - lifted.l2_norm()).abs() <= 1e-10 * v2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_for_random_functions(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let g = grid(64);
        let u = GridFunction::new(g, vals.iter().map(|(a, b)| Complex64::new(*a, *b)).collect()).unwrap();
        let v = apply_pdo(&DiscreteSymbol::one(g), &u).unwrap();
        prop_assert!(max_diff(&u.values, &v.values) <= 1e-13);
    }

    #[test]
    fn composition_is_operator_product_for_random_symbols(
        c1 in prop::collection::vec(-1.0f64..1.0, 4),
        c2 in prop::collection::vec(-1.0f64..1.0, 4),
        vals in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let g = grid(32);
        let w = 2.0 * PI / g.l;
        let a1 = DiscreteSymbol::from_fn(g, |x, xi| Complex64::new(c1[0] + c1[1] * (w * x[0]).sin(), c1[2] * xi[0] + c1[3] * (w * x[0]).cos()));
        let a2 = DiscreteSymbol::from_fn(g, |x, xi| Complex64::new(c2[0] * xi[0].cos() + c2[1] * (2.0 * w * x[0]).sin(), c2[2] + c2[3] * (w * x[0]).cos() * xi[0]));
        let u = GridFunction::new(g, vals.iter().map(|v| c(*v)).collect()).unwrap();
        let b = compose_kn(&a1, &a2, 0.0).unwrap();
        let lhs = apply_pdo(&b, &u).unwrap();
        let rhs = apply_pdo(&a1, &apply_pdo(&a2, &u).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-8 * u.l2_norm());
    }
}

use std::f64::consts::PI;

use super::*;
use crate::symbols::{Modulation, Psi};

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(1, n, 2.0 * PI).unwrap()
}

fn modulated() -> TimeDependentSymbol {
    TimeDependentSymbol::separable(Modulation { amp: 0.5, freq: 1.0 }, Psi::quadratic(), 1).unwrap()
}

fn heat() -> TimeDependentSymbol {
    TimeDependentSymbol::multiplier(Psi::quadratic(), 1).unwrap()
}

fn sup_sym(s: &DiscreteSymbol) -> f64 {
    s.sup_norm()
}

#[test]
fn q1_vanishes_for_x_independent_symbols() {
    let g = grid(16);
    let pi = Partition::slices(0.0, 0.1, 4).unwrap();
    let q1 = correction_q1(&heat(), &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(sup_sym(&q1) < 1e-9, "{}", sup_sym(&q1));
}

#[test]
fn remainder_vanishes_for_x_independent_symbols() {
    let g = grid(16);
    let pi = Partition::slices(0.0, 0.1, 3).unwrap();
    let r = remainder_r(&heat(), &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(sup_sym(&r) < 1e-9);
    let big = assemble_remainder(&heat(), &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(sup_sym(&big) < 1e-9);
}

#[test]
fn principal_term_is_product_of_slices() {
    let g = grid(16);
    let a = modulated();
    let pi = Partition::slices(0.0, 0.2, 3).unwrap();
    let q0 = principal_q0(&a, &pi, &g, 6).unwrap();
    let mut prod = DiscreteSymbol::one(g);
    for w in pi.times().windows(2) {
        let p = frozen_exp_symbol(&a, w[0], w[1], &g, 6).unwrap();
        prod = prod.zip_with(&p, |u, v| u * v).unwrap();
    }
    assert!(q0.sub(&prod).unwrap().sup_norm() < 1e-12);
}

#[test]
fn key_lemma_identity_holds() {
    let g = grid(16);
    let a = modulated();
    for k in 1..=3 {
        let pi = Partition::slices(0.0, 0.01 * (k + 1) as f64, k + 1).unwrap();
        let rep = verify_key_lemma(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
        assert!(rep.identity_residual <= IDENTITY_TOL, "k = {k}: {rep:?}");
        assert!(rep.residual_without_remainder > rep.identity_residual, "{rep:?}");
    }
}

#[test]
fn key_lemma_scaling_checks_pass() {
    let g = grid(32);
    let a = modulated();
    let pi = Partition::slices(0.0, 0.002, 3).unwrap();
    let rep = verify_key_lemma(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
    for c in &rep.scaling_checks {
        assert!(c.pass, "{c:?}");
    }
    assert!(rep.passed);
}

#[test]
fn q1_weighted_norm_is_linear_in_window() {
    let g = grid(32);
    let a = modulated();
    let weighted = |t: f64| {
        let pi = Partition::slices(0.0, t, 4).unwrap();
        let q1 = correction_q1(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
        let w = DiscreteSymbol::bracket_weights(&g, &a.psi_ref, -(a.m - 1.0));
        q1.weighted_sup(&w)
    };
    let ratio = weighted(0.4) / weighted(0.2);
    assert!((1.5..=2.6).contains(&ratio), "{ratio}");
}

#[test]
fn fujiwara_identity_for_three_interior_points() {
    let g = grid(16);
    let a = modulated();
    let pi = Partition::new(vec![0.0, 0.004, 0.01, 0.013, 0.02]).unwrap();
    let rep = verify_fujiwara(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(rep.passed, "{rep:?}");
    let seqs: Vec<Vec<usize>> = rep.per_term.iter().filter_map(|t| t.sequence.as_ref().map(|s| s.entries().to_vec())).collect();
    assert_eq!(seqs, vec![vec![2], vec![2, 4], vec![3], vec![4]]);
}

#[test]
fn q0_derivative_bounds_hold() {
    let g = grid(32);
    let a = modulated();
    let pi = Partition::slices(0.0, 0.02, 3).unwrap();
    let bounds = q0_derivative_bounds(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
    assert_eq!(bounds.len(), 5);
    for b in &bounds {
        assert!(b.pass, "{b:?}");
    }
}

#[test]
fn analytic_and_fd_derivatives_agree() {
    let g = grid(16);
    let a = modulated();
    let pi = Partition::slices(0.0, 0.03, 3).unwrap();
    let fd = remainder_r(&a, &pi, &g, &DecompositionOptions::default()).unwrap();
    let opts = DecompositionOptions { derivatives: DerivativeSource::Analytic, ..Default::default() };
    let an = remainder_r(&a, &pi, &g, &opts).unwrap();
    assert!(fd.sub(&an).unwrap().sup_norm() <= 1e-4 * fd.sup_norm().max(1e-12));
}

#[test]
fn rejects_unsupported_depths() {
    let g = grid(16);
    let a = modulated();
    let pi = Partition::slices(0.0, 0.1, 1).unwrap();
    assert!(verify_key_lemma(&a, &pi, &g, &DecompositionOptions::default()).is_err());
    let pi = Partition::slices(0.0, 0.1, 3).unwrap();
    assert!(verify_fujiwara(&a, &pi, &g, &DecompositionOptions::default()).is_err());
}


#[test]
fn multiplier_passes_every_check_trivially() {
    let g = grid(16);
    let pi = Partition::slices(0.0, 0.01, 3).unwrap();
    let rep = verify_key_lemma(&heat(), &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(rep.identity_residual <= 1e-9, "{rep:?}");
    assert!(rep.passed, "{rep:?}");
    let pi = Partition::slices(0.0, 0.01, 4).unwrap();
    let rep = verify_fujiwara(&heat(), &pi, &g, &DecompositionOptions::default()).unwrap();
    assert!(rep.identity_residual <= 1e-9 && rep.passed, "{rep:?}");
}

//! Multivariate chain rule for `f ∘ g` with scalar outer `f`, and the elementary exponential estimate.

use std::collections::HashMap;

use crate::{Error, Result};

/// Partial derivatives `∂^α g` keyed by multi-index.
pub type DerivativeTable = HashMap<Vec<usize>, f64>;

/// `∂^γ (f ∘ g)` where `f_derivs[j] = f^{(j)}(g(x))` and `g_derivs[α] = ∂^α g(x)`.
///
/// Coefficients come from enumerating set partitions of the `|γ|` differentiation slots: each
/// partition into `j` blocks contributes `f^{(j)} · Π_blocks ∂^{block} g`.
pub fn faa_di_bruno_derivative(f_derivs: &[f64], g_derivs: &DerivativeTable, gamma: &[usize]) -> Result<f64> {
    let order: usize = gamma.iter().sum();
    if order > 4 {
        return Err(Error::InvalidArgument(format!("|γ| = {order} exceeds the supported order 4")));
    }
    if f_derivs.len() <= order {
        return Err(Error::InvalidArgument(format!(
            "outer derivative f^({}) is needed but only {} entries were given",
            order,
            f_derivs.len()
        )));
    }
    if order == 0 {
        return Ok(f_derivs[0]);
    }
    let slots: Vec<usize> = gamma.iter().enumerate().flat_map(|(v, &k)| std::iter::repeat_n(v, k)).collect();
    let d = gamma.len();
    let mut total = 0.0;
    let mut blocks: Vec<Vec<usize>> = vec![];
    let mut err = None;
    for_each_partition(&slots, 0, &mut blocks, &mut |blocks| {
        let mut term = f_derivs[blocks.len()];
        for b in blocks {
            let mut alpha = vec![0; d];
            for &v in b {
                alpha[v] += 1;
            }
            match g_derivs.get(&alpha) {
                Some(v) => term *= v,
                None => {
                    err.get_or_insert(alpha);
                    return;
                }
            }
        }
        total += term;
    });
    match err {
        Some(alpha) => Err(Error::MissingDerivative(alpha)),
        None => Ok(total),
    }
}

fn for_each_partition(slots: &[usize], i: usize, blocks: &mut Vec<Vec<usize>>, visit: &mut dyn FnMut(&[Vec<usize>])) {
    if i == slots.len() {
        visit(blocks);
        return;
    }
    for b in 0..blocks.len() {
        blocks[b].push(slots[i]);
        for_each_partition(slots, i + 1, blocks, visit);
        blocks[b].pop();
    }
    blocks.push(vec![slots[i]]);
    for_each_partition(slots, i + 1, blocks, visit);
    blocks.pop();
}

/// `sup_{s>0} s^j e^{−s} = (j/e)^j`, with `0⁰ = 1`.
pub fn exp_estimate_bound(j: u32) -> f64 {
    if j == 0 {
        1.0
    } else {
        (j as f64 / std::f64::consts::E).powi(j as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::fd::derivative;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn table(entries: &[(&[usize], f64)]) -> DerivativeTable {
        entries.iter().map(|(k, v)| (k.to_vec(), *v)).collect()
    }

    #[test]
    fn exp_of_square_second_derivative() {
        for x in [0.0f64, 0.7, -1.2] {
            let e = (x * x).exp();
            let g = table(&[(&[1], 2.0 * x), (&[2], 2.0)]);
            let v = faa_di_bruno_derivative(&[e, e, e], &g, &[2]).unwrap();
            assert!((v - (2.0 + 4.0 * x * x) * e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_order_is_composition() {
        assert_eq!(faa_di_bruno_derivative(&[3.5], &DerivativeTable::new(), &[0, 0]).unwrap(), 3.5);
    }

    #[test]
    fn exp_of_sine_third_derivative_vs_finite_difference() {
        let x = 0.0f64;
        let e = x.sin().exp();
        let g = table(&[(&[1], x.cos()), (&[2], -x.sin()), (&[3], -x.cos())]);
        let v = faa_di_bruno_derivative(&[e; 4], &g, &[3]).unwrap();
        let fd = derivative(|z| Complex64::new(z.sin().exp(), 0.0), x, 3, 1e-4).re;
        assert!((v - fd).abs() < 1e-6, "{v} vs {fd}");
    }

    #[test]
    fn bivariate_mixed_derivative() {
        // f = exp, g(x,y) = x·y²; ∂x∂y e^{g} = e^g (g_xy + g_x g_y)
        let (x, y) = (0.3f64, -0.8f64);
        let e = (x * y * y).exp();
        let g = table(&[(&[1, 0], y * y), (&[0, 1], 2.0 * x * y), (&[1, 1], 2.0 * y)]);
        let v = faa_di_bruno_derivative(&[e; 3], &g, &[1, 1]).unwrap();
        assert!((v - e * (2.0 * y + y * y * 2.0 * x * y)).abs() < 1e-12);
    }

    #[test]
    fn missing_entry_is_named() {
        let g = table(&[(&[1], 1.0)]);
        match faa_di_bruno_derivative(&[1.0; 3], &g, &[2]) {
            Err(Error::MissingDerivative(a)) => assert_eq!(a, vec![2]),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn exponential_estimate(j in 0u32..=6, s in 1e-6f64..50.0) {
            prop_assert!(s.powi(j as i32) * (-s).exp() <= exp_estimate_bound(j) * (1.0 + 1e-12));
        }

        #[test]
        fn chain_rule_vs_finite_difference(x in -1.0f64..1.0, a in 0.2f64..1.5) {
            // f = exp, g = a·sin(x)
            let e = (a * x.sin()).exp();
            let g = table(&[(&[1], a * x.cos()), (&[2], -a * x.sin()), (&[3], -a * x.cos()), (&[4], a * x.sin())]);
            for k in 1..=3usize {
                let v = faa_di_bruno_derivative(&[e; 5], &g, &[k]).unwrap();
                let fd = derivative(|z| Complex64::new((a * z.sin()).exp(), 0.0), x, k, 1e-4).re;
                prop_assert!((v - fd).abs() <= 1e-6 * v.abs().max(1.0), "k={} {} vs {}", k, v, fd);
            }
        }

        #[test]
        fn chain_rule_vs_cauchy_integral(x in -1.0f64..1.0, a in 0.2f64..1.5) {
            // k-th derivative of the entire function e^{a sin z} from its Taylor coefficient on a circle.
            let e = (a * x.sin()).exp();
            let g = table(&[(&[1], a * x.cos()), (&[2], -a * x.sin()), (&[3], -a * x.cos()), (&[4], a * x.sin())]);
            let (r, n) = (0.5, 64);
            for k in 0..=4usize {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    let z = Complex64::new(x, 0.0) + r * Complex64::from_polar(1.0, th);
                    acc += (a * z.sin()).exp() * Complex64::from_polar(1.0, -(k as f64) * th);
                }
                let fact: f64 = (1..=k).map(|v| v as f64).product();
                let exact = (acc / n as f64).re * fact / r.powi(k as i32);
                let v = faa_di_bruno_derivative(&[e; 5], &g, &[k]).unwrap();
                prop_assert!((v - exact).abs() <= 1e-10 * exact.abs().max(1.0), "k={} {} vs {}", k, v, exact);
            }
        }
    }
}

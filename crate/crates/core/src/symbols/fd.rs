//! Central finite differences (fourth-order accurate) for symbol derivatives.

use num_complex::Complex64;

/// Default base step.
pub const FD_STEP: f64 = 1e-4;

// (offsets, weights, divisor) with f^(p)(z) ≈ Σ w_j f(z + o_j h) / (divisor · h^p)
const D1: (&[i32], &[f64], f64) = (&[-2, -1, 1, 2], &[1.0, -8.0, 8.0, -1.0], 12.0);
const D2: (&[i32], &[f64], f64) = (&[-2, -1, 0, 1, 2], &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0);
const D3: (&[i32], &[f64], f64) = (&[-3, -2, -1, 1, 2, 3], &[1.0, -8.0, 13.0, -13.0, 8.0, -1.0], 8.0);
const D4: (&[i32], &[f64], f64) =
    (&[-3, -2, -1, 0, 1, 2, 3], &[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0);

fn stencil(order: usize) -> (&'static [i32], &'static [f64], f64) {
    match order {
        1 => D1,
        2 => D2,
        3 => D3,
        4 => D4,
        _ => panic!("finite differences of order {order} are not supported (max 4)"),
    }
}

/// Step for a derivative of the given order at `z`: `h₁ = max(b, b(1+|z|))` for orders 1 and 2,
/// widened to `h₁^{2/order}` above that to keep the round-off amplification `ε/h^order` near `ε/h₁²`.
pub fn step_for(z: f64, base: f64, order: usize) -> f64 {
    let h1 = base.max(base * (1.0 + z.abs()));
    if order <= 2 {
        h1
    } else {
        h1.powf(2.0 / order as f64)
    }
}

/// `f^{(order)}(z)` for `order ≤ 4`.
pub fn derivative<F: Fn(f64) -> Complex64>(f: F, z: f64, order: usize, base: f64) -> Complex64 {
    if order == 0 {
        return f(z);
    }
    let h = step_for(z, base, order);
    let (offs, w, div) = stencil(order);
    let mut acc = Complex64::new(0.0, 0.0);
    for (o, c) in offs.iter().zip(w) {
        acc += *c * f(z + *o as f64 * h);
    }
    acc / (div * h.powi(order as i32))
}

/// Mixed partial `∂^{orders} f(point)`, one axis at a time.
///
/// Every axis uses the step of a derivative of the *total* order, since nested stencils multiply
/// their round-off amplification.
pub fn partial(f: &dyn Fn(&[f64]) -> Complex64, point: &[f64], orders: &[usize], base: f64) -> Complex64 {
    assert_eq!(point.len(), orders.len());
    let mut p = point.to_vec();
    let total = orders.iter().sum();
    partial_rec(f, &mut p, orders, 0, base, total)
}

fn partial_rec(
    f: &dyn Fn(&[f64]) -> Complex64,
    p: &mut Vec<f64>,
    orders: &[usize],
    axis: usize,
    base: f64,
    total: usize,
) -> Complex64 {
    if axis == orders.len() {
        return f(p);
    }
    if orders[axis] == 0 {
        return partial_rec(f, p, orders, axis + 1, base, total);
    }
    let z = p[axis];
    let order = orders[axis];
    let h = step_for(z, base, total);
    let (offs, w, div) = stencil(order);
    let mut acc = Complex64::new(0.0, 0.0);
    for (o, c) in offs.iter().zip(w) {
        p[axis] = z + *o as f64 * h;
        acc += *c * partial_rec(f, p, orders, axis + 1, base, total);
    }
    p[axis] = z;
    acc / (div * h.powi(order as i32))
}

/// All multi-indices in `d` variables with total order `≤ max`.
pub fn multi_indices(d: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur = vec![0; d];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max, &mut cur, &mut out);
    out.sort_by_key(|m| m.iter().sum::<usize>());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn derivatives_of_sine() {
        let x = 0.37f64;
        let expect = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin()];
        for (order, e) in expect.iter().enumerate() {
            let d = derivative(|z| c(z.sin()), x, order, FD_STEP);
            assert!((d.re - e).abs() < 1e-6, "order {order}: {} vs {e}", d.re);
        }
    }

    #[test]
    fn stencils_exact_on_polynomials() {
        for p in 0..=4usize {
            let f = |z: f64| c(z.powi(4));
            let d = derivative(f, 1.3, p, 1e-2);
            let exact = match p {
                0 => 1.3f64.powi(4),
                1 => 4.0 * 1.3f64.powi(3),
                2 => 12.0 * 1.3f64.powi(2),
                3 => 24.0 * 1.3,
                _ => 24.0,
            };
            assert!((d.re - exact).abs() < 1e-6 * exact.abs().max(1.0), "order {p}");
        }
    }

    #[test]
    fn mixed_partial() {
        let f = |v: &[f64]| c((v[0] * v[1]).sin());
        // ∂x∂y sin(xy) = cos(xy) − xy sin(xy)
        let (x, y) = (0.4f64, 0.9f64);
        let e = (x * y).cos() - x * y * (x * y).sin();
        assert!((partial(&f, &[x, y], &[1, 1], FD_STEP).re - e).abs() < 1e-7);
    }

    #[test]
    fn multi_index_count() {
        assert_eq!(multi_indices(1, 4).len(), 5);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 0), vec![vec![0, 0, 0]]);
    }
}

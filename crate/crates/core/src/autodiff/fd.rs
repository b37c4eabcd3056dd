//! Central finite differences, used as an independent oracle for the
//! automatic derivatives.

use alloc::vec;
use alloc::vec::Vec;

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe);
        probe[k] = x[k] - h;
        let fm = f(&probe);
        probe[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}

/// `sum_k (f(x + h e_k) - 2 f(x) + f(x - h e_k)) / h^2`
pub fn central_laplacian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let mut probe = x.to_vec();
    let f0 = f(x);
    let mut acc = 0.0;
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe);
        probe[k] = x[k] - h;
        let fm = f(&probe);
        probe[k] = x[k];
        acc += (fp - 2.0 * f0 + fm) / (h * h);
    }
    acc
}

/// Trace of the Hessian assembled from mixed central differences.
pub fn hessian_trace(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let mut probe = x.to_vec();
    let mut acc = 0.0;
    for k in 0..x.len() {
        let mut at = |dk: f64| {
            probe[k] = x[k] + dk;
            let v = f(&probe);
            probe[k] = x[k];
            v
        };
        // fourth-order stencil on the diagonal entry
        let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
        let f0 = f(x);
        acc += (-p2 + 16.0 * p1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    acc
}

/// One-sided first derivative with a second-order three-point stencil.
/// `direction` is `+1.0` for the right derivative and `-1.0` for the left.
pub fn one_sided_derivative(f: impl Fn(f64) -> f64, t: f64, h: f64, direction: f64) -> f64 {
    let s = direction * h;
    (-3.0 * f(t) + 4.0 * f(t + s) - f(t + 2.0 * s)) / (2.0 * s)
}

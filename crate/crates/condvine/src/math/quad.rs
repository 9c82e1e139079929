//! Gauss–Legendre quadrature with cached node tables.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence; results are
/// cached per `n` since the same rule sizes recur throughout.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let computed = compute_gl(n);
    cache.lock().unwrap().insert(n, computed.clone());
    computed
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root of P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // Evaluate P_n(x), P_{n-1}(x) by upward recurrence; returns (P_n, P_n').
        let legendre = |x: f64| {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            (p0, n as f64 * (x * p0 - p1) / (x * x - 1.0))
        };
        for _ in 0..100 {
            let (p, dp) = legendre(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // derivative at the converged node, for the weight formula
        let (_, dp) = legendre(x);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| half * w).collect(),
    )
}

/// ∫ₐᵇ f dx with the n-point rule.
pub fn integrate(f: impl Fn(f64) -> f64, n: usize, a: f64, b: f64) -> f64 {
    let (xs, ws) = gauss_legendre_on(n, a, b);
    xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_closed_forms() {
        let (x2, w2) = gauss_legendre(2);
        assert!((x2[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((x2[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((w2[0] - 1.0).abs() < 1e-15 && (w2[1] - 1.0).abs() < 1e-15);

        let (x3, w3) = gauss_legendre(3);
        assert!((x3[0] + (0.6f64).sqrt()).abs() < 1e-15);
        assert!(x3[1].abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((w3[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for &n in &[1, 2, 5, 20, 101, 201] {
            let (_, ws) = gauss_legendre(n);
            let sum: f64 = ws.iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "n={n}: weight sum {sum}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        // 5-point rule integrates x^9 exactly: ∫₀¹ x⁹ = 0.1
        let got = integrate(|x| x.powi(9), 5, 0.0, 1.0);
        assert!((got - 0.1).abs() < 1e-14);
        // but not x^10 (degree 10 > 9): small but nonzero error
        let got10 = integrate(|x| x.powi(10), 5, 0.0, 1.0);
        assert!((got10 - 1.0 / 11.0).abs() > 1e-12);
    }

    #[test]
    fn smooth_integrand_reference() {
        // ∫₋₁¹ cos x dx = 2 sin 1
        let got = integrate(f64::cos, 20, -1.0, 1.0);
        assert!((got - 2.0 * 1f64.sin()).abs() < 1e-14);
        // ∫₀¹ e^x = e − 1 on a mapped interval
        let got = integrate(f64::exp, 30, 0.0, 1.0);
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn large_rules_are_sane() {
        for &n in &[101, 201, 401] {
            let (xs, ws) = gauss_legendre(n);
            assert_eq!(xs.len(), n);
            // strictly increasing nodes within (-1, 1)
            for i in 1..n {
                assert!(xs[i] > xs[i - 1]);
            }
            assert!(xs[0] > -1.0 && xs[n - 1] < 1.0);
            assert!(ws.iter().all(|&w| w > 0.0));
        }
    }
}

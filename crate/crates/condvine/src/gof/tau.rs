//! Kendall rank correlation and the associated large-sample independence
//! test.

use crate::error::{Error, Result};
use crate::math::special::norm_cdf;

/// Kendall's τ for continuous data (no ties), computed in O(n log n) by
/// sorting on the first coordinate and merge-counting inversions of the
/// second.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "kendall_tau: length mismatch");
    let n = x.len();
    assert!(n >= 2, "kendall_tau needs at least two observations");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        x[i].partial_cmp(&x[j]).unwrap().then(y[i].partial_cmp(&y[j]).unwrap())
    });
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let inversions = merge_count(&mut ys, &mut buf);
    let pairs = 0.5 * n as f64 * (n - 1) as f64;
    1.0 - 2.0 * inversions as f64 / pairs
}

/// Standard-normal z statistic of the τ-based test of independence,
/// z = 3 τ̂ √(n(n−1)) / √(2(2n+5)); |z| > Φ⁻¹(1−α/2) rejects.
pub fn tau_independence_z(tau_hat: f64, n: usize) -> f64 {
    let nf = n as f64;
    3.0 * tau_hat * (nf * (nf - 1.0)).sqrt() / (2.0 * (2.0 * nf + 5.0)).sqrt()
}

/// Two-sided test of independence based on Kendall's τ and its
/// large-sample normal approximation. Returns `(z, p)` where `z` is the
/// standardized statistic and `p` the two-sided p-value.
pub fn tau_independence_test(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "tau_independence_test: length mismatch ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "tau_independence_test needs at least 10 observations, got {}",
            x.len()
        )));
    }
    let z = tau_independence_z(kendall_tau(x, y), x.len());
    let p = (2.0 * norm_cdf(-z.abs())).min(1.0);
    Ok((z, p))
}

/// Count inversions (pairs i < j with v[i] > v[j]) while merge-sorting
/// `v` in place.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = v.split_at_mut(mid);
    let mut inv = merge_count(left, &mut buf[..mid]) + merge_count(right, &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0usize, 0usize, 0usize);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            buf[k] = right[j];
            // left[i..] all exceed right[j]
            inv += (left.len() - i) as u64;
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    inv
}

//! Scalar root finding and derivative-free optimization.

use crate::error::{Error, Result};

/// Solve f(x) = target for x in [lo, hi], where f is continuous and
/// increasing on the bracket. Secant steps with a bisection safeguard.
///
/// The bracket endpoints are trusted (f(lo) <= target <= f(hi) is not
/// re-verified); if the function is not monotone the safeguard still
/// converges to *a* crossing inside the bracket.
pub fn invert_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo) - target;
    let mut fhi = f(hi) - target;
    if flo > 0.0 {
        return Ok(lo);
    }
    if fhi < 0.0 {
        return Ok(hi);
    }
    let mut x = 0.5 * (lo + hi);
    for iter in 0..200 {
        if hi - lo <= xtol {
            return Ok(0.5 * (lo + hi));
        }
        let fx = f(x) - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        // Secant through the bracket endpoints on even iterations; forced
        // bisection on odd ones. Pure bracketed secant can stall against one
        // endpoint (false-position stagnation), shrinking the bracket by an
        // arbitrarily small factor per step; alternating with bisection
        // guarantees the bracket at least halves every other iteration.
        let denom = fhi - flo;
        let mut next = if iter % 2 == 0 && denom.abs() > 0.0 {
            lo - flo * (hi - lo) / denom
        } else {
            0.5 * (lo + hi)
        };
        let margin = 0.01 * (hi - lo);
        if !(next > lo + margin && next < hi - margin) {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    Err(Error::NonConvergence { op: "invert_increasing", iterations: 200 })
}

/// Maximize a unimodal function on [lo, hi] by golden-section search.
/// Returns (argmax, max).
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1)/2
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximize f over R^n with the Nelder–Mead simplex method.
///
/// `start` seeds the simplex; `scale` sets the initial per-coordinate spread.
/// Returns (argmax, max). Convергence is by simplex diameter and value
/// spread; the caller is responsible for any parameter-space transforms
/// that keep iterates feasible.
pub fn nelder_mead_max(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    scale: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let neg = |x: &[f64]| -f(x);
    // simplex of n+1 points
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| neg(p)).collect();

    for _ in 0..max_iter {
        // order ascending (best = smallest of the negated objective)
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| pts[i].clone()).collect();
        let ovals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        pts = ordered;
        vals = ovals;

        let diam: f64 = (0..n)
            .map(|j| {
                let lo = pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        if diam < 1e-10 && (vals[n] - vals[0]).abs() < 1e-12 {
            break;
        }

        // centroid of all but worst
        let mut cen = vec![0.0; n];
        for p in &pts[..n] {
            for j in 0..n {
                cen[j] += p[j] / n as f64;
            }
        }
        let worst = pts[n].clone();
        let reflect: Vec<f64> = (0..n).map(|j| cen[j] + (cen[j] - worst[j])).collect();
        let fr = neg(&reflect);
        if fr < vals[0] {
            // try expansion
            let expand: Vec<f64> = (0..n).map(|j| cen[j] + 2.0 * (cen[j] - worst[j])).collect();
            let fe = neg(&expand);
            if fe < fr {
                pts[n] = expand;
                vals[n] = fe;
            } else {
                pts[n] = reflect;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = reflect;
            vals[n] = fr;
        } else {
            // contraction (outside if reflection helped over worst, else inside)
            let towards = if fr < vals[n] { &reflect } else { &worst };
            let contract: Vec<f64> = (0..n).map(|j| cen[j] + 0.5 * (towards[j] - cen[j])).collect();
            let fc = neg(&contract);
            if fc < vals[n].min(fr) {
                pts[n] = contract;
                vals[n] = fc;
            } else {
                // shrink toward best
                for i in 1..=n {
                    for j in 0..n {
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    }
                    vals[i] = neg(&pts[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    (pts[best].clone(), -vals[best])
}

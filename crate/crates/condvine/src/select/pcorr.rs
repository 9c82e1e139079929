//! Normal scores, Pearson correlation, and partial correlation.
//!
//! Partial correlations are computed by the classic recursion that removes
//! one conditioning variable at a time; a regression-residual route backs
//! it as an internal cross-check.

use crate::error::{Error, Result};
use crate::math::special::norm_ppf;

/// Maps pseudo-observations through the standard normal quantile function.
///
/// Every value must lie strictly inside the unit interval.
pub fn normal_scores(col: &[f64]) -> Result<Vec<f64>> {
    if col.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
        return Err(Error::InvalidArgument(
            "normal scores need values in the open unit interval".into(),
        ));
    }
    Ok(col.iter().map(|&u| norm_ppf(u)).collect())
}

/// Sample Pearson correlation of two equally long columns.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(
            "correlation needs at least 3 observations".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let da = a - mx;
        let db = b - my;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::InvalidArgument(
            "correlation is undefined for a constant column".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Partial correlation of columns `i` and `j` given the columns in
/// `given`, all 1-based indices into `cols`.
///
/// With an empty conditioning set this is the plain Pearson correlation.
/// Otherwise the recursion
/// `r_{ij;kS} = (r_{ij;S} - r_{ik;S} r_{jk;S}) / sqrt((1-r_{ik;S}^2)(1-r_{jk;S}^2))`
/// peels off one conditioning variable at a time. A vanishing denominator
/// means the conditioning set explains one of the targets exactly and the
/// partial correlation is undefined.
pub fn partial_correlation(
    cols: &[Vec<f64>],
    i: usize,
    j: usize,
    given: &[usize],
) -> Result<f64> {
    validate_indices(cols.len(), i, j, given)?;
    let n = cols[0].len();
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "partial correlation needs equally long columns".into(),
        ));
    }
    // Correlation matrix over just the variables involved.
    let mut vars = vec![i, j];
    vars.extend_from_slice(given);
    let m = vars.len();
    let mut corr = vec![vec![1.0; m]; m];
    for a in 0..m {
        for b in (a + 1)..m {
            let r = pearson_correlation(&cols[vars[a] - 1], &cols[vars[b] - 1])?;
            corr[a][b] = r;
            corr[b][a] = r;
        }
    }
    let rest: Vec<usize> = (2..m).collect();
    partial_from_corr(&corr, 0, 1, &rest)
}

/// Same quantity via regression residuals: regress `i` and `j` each on the
/// conditioning columns (with intercept) and correlate the residuals.
/// Algebraically identical to [`partial_correlation`]; exposed as an
/// independent route for cross-checking.
pub fn partial_correlation_residual(
    cols: &[Vec<f64>],
    i: usize,
    j: usize,
    given: &[usize],
) -> Result<f64> {
    validate_indices(cols.len(), i, j, given)?;
    if given.is_empty() {
        return pearson_correlation(&cols[i - 1], &cols[j - 1]);
    }
    let ri = ols_residuals(&cols[i - 1], given, cols)?;
    let rj = ols_residuals(&cols[j - 1], given, cols)?;
    pearson_correlation(&ri, &rj)
}

fn validate_indices(d: usize, i: usize, j: usize, given: &[usize]) -> Result<()> {
    let mut all = vec![i, j];
    all.extend_from_slice(given);
    for &v in &all {
        if v == 0 || v > d {
            return Err(Error::InvalidArgument(format!(
                "variable index {v} out of range 1..={d}"
            )));
        }
    }
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "target and conditioning variables must be distinct".into(),
        ));
    }
    Ok(())
}

/// Recursion on a precomputed correlation matrix; `rest` holds matrix
/// indices of the conditioning variables still to be removed.
fn partial_from_corr(corr: &[Vec<f64>], i: usize, j: usize, rest: &[usize]) -> Result<f64> {
    if rest.is_empty() {
        return Ok(corr[i][j]);
    }
    let k = rest[0];
    let tail = &rest[1..];
    let rij = partial_from_corr(corr, i, j, tail)?;
    let rik = partial_from_corr(corr, i, k, tail)?;
    let rjk = partial_from_corr(corr, j, k, tail)?;
    let den2 = (1.0 - rik * rik) * (1.0 - rjk * rjk);
    if den2 < 1e-24 {
        return Err(Error::InvalidArgument(
            "partial correlation undefined: conditioning set explains a target exactly".into(),
        ));
    }
    Ok((rij - rik * rjk) / den2.sqrt())
}

/// Residuals of an intercept-plus-covariates least-squares fit of `y` on
/// the 1-based `given` columns.
fn ols_residuals(y: &[f64], given: &[usize], cols: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = y.len();
    let p = given.len() + 1;
    // Design matrix columns: intercept then each conditioning column.
    let mut x: Vec<&[f64]> = Vec::with_capacity(given.len());
    for &g in given {
        x.push(&cols[g - 1]);
    }
    // Normal equations.
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    let col_val = |c: usize, row: usize| -> f64 {
        if c == 0 {
            1.0
        } else {
            x[c - 1][row]
        }
    };
    for a in 0..p {
        for b in a..p {
            let mut s = 0.0;
            for row in 0..n {
                s += col_val(a, row) * col_val(b, row);
            }
            xtx[a][b] = s;
            xtx[b][a] = s;
        }
        let mut s = 0.0;
        for row in 0..n {
            s += col_val(a, row) * y[row];
        }
        xty[a] = s;
    }
    let beta = cholesky_solve(&mut xtx, &xty)?;
    let mut res = Vec::with_capacity(n);
    for row in 0..n {
        let mut fit = 0.0;
        for a in 0..p {
            fit += beta[a] * col_val(a, row);
        }
        res.push(y[row] - fit);
    }
    Ok(res)
}

/// Solves a symmetric positive-definite system in place.
fn cholesky_solve(a: &mut [Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let p = b.len();
    // Scale-aware pivot floor so near-collinear designs are rejected.
    let scale = (0..p).map(|k| a[k][k].abs()).fold(0.0_f64, f64::max);
    for k in 0..p {
        for m in 0..k {
            a[k][k] -= a[k][m] * a[k][m];
        }
        if a[k][k] <= 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidArgument(
                "conditioning columns are collinear; regression is singular".into(),
            ));
        }
        a[k][k] = a[k][k].sqrt();
        for r in (k + 1)..p {
            for m in 0..k {
                a[r][k] -= a[r][m] * a[k][m];
            }
            a[r][k] /= a[k][k];
        }
    }
    // Forward then backward substitution with the lower factor.
    let mut yv = b.to_vec();
    for k in 0..p {
        for m in 0..k {
            yv[k] -= a[k][m] * yv[m];
        }
        yv[k] /= a[k][k];
    }
    for k in (0..p).rev() {
        for m in (k + 1)..p {
            yv[k] -= a[m][k] * yv[m];
        }
        yv[k] /= a[k][k];
    }
    Ok(yv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss(rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let u: f64 = rng.gen();
            if u > 0.0 && u < 1.0 {
                return norm_ppf(u);
            }
        }
    }

    /// Trivariate gaussian data with correlations r12, r13, r23 via an
    /// explicit Cholesky factor.
    fn trivariate(n: usize, r12: f64, r13: f64, r23: f64, seed: u64) -> Vec<Vec<f64>> {
        let l21 = r12;
        let l22 = (1.0 - r12 * r12).sqrt();
        let l31 = r13;
        let l32 = (r23 - r12 * r13) / l22;
        let l33 = (1.0 - l31 * l31 - l32 * l32).sqrt();
        assert!(l33 > 0.0, "correlation matrix must be positive definite");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for _ in 0..n {
            let (e1, e2, e3) = (gauss(&mut rng), gauss(&mut rng), gauss(&mut rng));
            cols[0].push(e1);
            cols[1].push(l21 * e1 + l22 * e2);
            cols[2].push(l31 * e1 + l32 * e2 + l33 * e3);
        }
        cols
    }

    #[test]
    fn partial_correlation_matches_the_analytic_value() {
        // rho_{12;3} = (r12 - r13 r23) / sqrt((1-r13^2)(1-r23^2)).
        let (r12, r13, r23) = (0.6, 0.5, 0.4);
        let cols = trivariate(10_000, r12, r13, r23, 42);
        let expect = (r12 - r13 * r23) / ((1.0 - r13 * r13) * (1.0 - r23 * r23)).sqrt();
        let got = partial_correlation(&cols, 1, 2, &[3]).unwrap();
        assert!(
            (got - expect).abs() < 0.02,
            "partial correlation {got} vs analytic {expect}"
        );
    }

    #[test]
    fn recursion_and_residual_routes_agree() {
        for seed in [1u64, 2, 3, 4, 5] {
            let cols = trivariate(400, 0.55, 0.35, 0.45, seed);
            // Add a fourth column correlated with the others.
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let extra: Vec<f64> = (0..400)
                .map(|i| 0.4 * cols[0][i] - 0.3 * cols[2][i] + 0.7 * gauss(&mut rng))
                .collect();
            let mut all = cols.clone();
            all.push(extra);
            for given in [vec![3], vec![4], vec![3, 4]] {
                let a = partial_correlation(&all, 1, 2, &given).unwrap();
                let b = partial_correlation_residual(&all, 1, 2, &given).unwrap();
                assert!(
                    (a - b).abs() < 1e-10,
                    "routes disagree: {a} vs {b} given {given:?}"
                );
            }
            let a = partial_correlation(&all, 2, 4, &[1, 3]).unwrap();
            let b = partial_correlation_residual(&all, 2, 4, &[1, 3]).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_conditioning_set_reduces_to_pearson() {
        let cols = trivariate(500, 0.5, 0.3, 0.2, 9);
        let a = partial_correlation(&cols, 1, 3, &[]).unwrap();
        let b = pearson_correlation(&cols[0], &cols[2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let cols = trivariate(100, 0.5, 0.3, 0.2, 11);
        assert!(partial_correlation(&cols, 1, 1, &[3]).is_err());
        assert!(partial_correlation(&cols, 1, 2, &[2]).is_err());
        assert!(partial_correlation(&cols, 0, 2, &[]).is_err());
        assert!(partial_correlation(&cols, 1, 4, &[]).is_err());

        // Singular conditioning: duplicate a column so the target is
        // explained exactly.
        let mut dup = cols.clone();
        dup.push(cols[0].clone());
        assert!(partial_correlation(&dup, 1, 2, &[4]).is_err());
        // Collinear design: columns 1 and 4 are identical.
        assert!(partial_correlation_residual(&dup, 2, 3, &[1, 4]).is_err());
    }

    #[test]
    fn normal_scores_invert_the_normal_cdf() {
        let u = vec![0.025, 0.5, 0.975];
        let z = normal_scores(&u).unwrap();
        assert!((z[1]).abs() < 1e-12);
        assert!((z[2] - 1.959964).abs() < 1e-5);
        assert!((z[0] + z[2]).abs() < 1e-12);
        assert!(normal_scores(&[0.5, 1.0]).is_err());
        assert!(normal_scores(&[0.5, f64::NAN]).is_err());
    }
}

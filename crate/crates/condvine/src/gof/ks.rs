//! One-sample Kolmogorov–Smirnov test against Uniform(0,1).

use crate::error::{Error, Result};

/// KS statistic `D_n` and asymptotic p-value for H0: samples are i.i.d.
/// Uniform(0,1).
///
/// The p-value comes from the Kolmogorov tail series at `sqrt(n) * D_n`,
/// summed to machine tolerance (never fewer than 20 terms). The test
/// expects continuous data; heavy ties make it conservative but are not
/// an error.
pub fn ks_uniform_test(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "Kolmogorov-Smirnov test needs at least 10 samples, got {n}"
        )));
    }
    if let Some(bad) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("sample value {bad} outside [0,1]")));
    }
    let mut x = samples.to_vec();
    x.sort_unstable_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        d = d.max((i + 1) as f64 / nf - xi).max(xi - i as f64 / nf);
    }
    Ok((d, kolmogorov_tail(nf.sqrt() * d)))
}

/// Asymptotic tail probability of the Kolmogorov statistic:
/// `P(K > lambda) = 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`.
pub(crate) fn kolmogorov_tail(lambda: f64) -> f64 {
    // Below 0.04 the survival probability is 1 to machine precision and
    // the alternating series converges too slowly to be useful.
    if lambda < 0.04 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=2000u32 {
        let jf = f64::from(j);
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if j >= 20 && term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

//! Probability-integral-transform checks for conditional samples: a
//! univariate PIT against the quadrature CDF, and a two-variable battery
//! that combines Rosenblatt-sequence KS tests with rank-independence
//! tests under a Bonferroni correction.

use crate::error::{Error, Result};
use crate::gof::{ks_uniform_test, tau_independence_test};
use crate::math::quad::integrate;
use crate::vine::{conditional_cdf_quadrature, EvalPlan};
use serde::Serialize;

/// Truncation window shared with the conditional quadrature routines.
const LO: f64 = 1e-6;
const HI: f64 = 1.0 - 1e-6;
/// Node counts: marginal normalizer (outer), one-dimensional integrals
/// (inner), and the short between-sample segments of the cumulative walk.
const OUTER_NODES: usize = 201;
const INNER_NODES: usize = 101;
const SEGMENT_NODES: usize = 21;

/// Overall size of the battery; each member test runs at `LEVEL / 6`.
const LEVEL: f64 = 0.05;

/// Probability integral transform of draws from a one-variable conditional
/// distribution: maps each draw x through the quadrature CDF
/// P(U_c1 ≤ x | rest = c2_vals). Uniform output indicates draws that match
/// the target.
pub fn pit_univariate(
    plan: &EvalPlan,
    c1: usize,
    c2_vals: &[f64],
    samples: &[f64],
) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|&x| conditional_cdf_quadrature(plan, c1, x, c2_vals))
        .collect()
}

/// One member test of a goodness-of-fit battery.
#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    /// True when `p_value` falls below the Bonferroni-corrected level.
    pub reject: bool,
}

/// Outcome of the two-variable Rosenblatt battery.
#[derive(Clone, Debug, Serialize)]
pub struct GofReport {
    /// Number of sample pairs tested.
    pub n: usize,
    /// Overall size of the battery.
    pub level: f64,
    /// Per-test level after Bonferroni correction.
    pub per_test_level: f64,
    pub tests: Vec<TestResult>,
    /// True when any member test rejects at the corrected level.
    pub reject: bool,
}

/// Goodness-of-fit battery for paired draws from a two-variable
/// conditional distribution.
///
/// Under the null that `samples` are draws from the distribution of
/// (U_{i1}, U_{i2}) given the remaining coordinates fixed at `c2_vals`,
/// the four PIT sequences — each marginal CDF applied to its own
/// coordinate, and each conditional CDF given the other coordinate — are
/// uniform, and marginal/conditional Rosenblatt pairs are independent.
/// The battery runs four KS tests and two Kendall-τ independence tests,
/// rejecting overall when any single test falls below 0.05/6.
///
/// Marginal CDFs use an outer 201-node rule for the normalizer, an inner
/// 101-node rule for integrating out the other coordinate, and short
/// 21-node segments between consecutive sorted samples for the cumulative
/// walk; conditional CDFs use one 101-node rule per sample. All integrals
/// truncate to [1e-6, 1−1e-6].
pub fn rosenblatt_battery(
    plan: &EvalPlan,
    c1_idx: (usize, usize),
    c2_vals: &[f64],
    samples: &[(f64, f64)],
) -> Result<GofReport> {
    let d = plan.dim();
    let (i1, i2) = c1_idx;
    if i1 == i2 || !(1..=d).contains(&i1) || !(1..=d).contains(&i2) {
        return Err(Error::InvalidArgument(format!(
            "rosenblatt_battery: target pair ({i1},{i2}) must be two distinct variables in 1..={d}"
        )));
    }
    if c2_vals.len() != d - 2 {
        return Err(Error::InvalidArgument(format!(
            "rosenblatt_battery: expected {} conditioning values, got {}",
            d - 2,
            c2_vals.len()
        )));
    }
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "rosenblatt_battery needs at least 10 sample pairs, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&(a, b)| !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
        return Err(Error::InvalidArgument(
            "rosenblatt_battery: sample coordinates must lie in (0,1)".into(),
        ));
    }

    // Joint density of the two free coordinates with the rest pinned;
    // proportional to the conditional density, so one normalizer serves
    // every marginal quantity.
    let mut template = vec![0.5; d];
    {
        let mut k = 0;
        for var in 1..=d {
            if var != i1 && var != i2 {
                let v = c2_vals[k];
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "rosenblatt_battery: conditioning value {v} for variable {var} must lie in (0,1)"
                    )));
                }
                template[var - 1] = v;
                k += 1;
            }
        }
    }
    let partial = plan.partial(&template, &[i1, i2])?;
    let dens = |a: f64, b: f64| partial.log_density(&[a, b]).exp();

    let xs1: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let xs2: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let v1m = marginal_pit(|t, s| dens(t, s), &xs1);
    let v2m = marginal_pit(|t, s| dens(s, t), &xs2);
    let v2c = conditional_pit(|g, t| dens(g, t), &xs1, &xs2);
    let v1c = conditional_pit(|g, t| dens(t, g), &xs2, &xs1);

    let per_test_level = LEVEL / 6.0;
    let mut tests = Vec::with_capacity(6);
    let push_ks = |name: &str, v: &[f64], tests: &mut Vec<TestResult>| -> Result<()> {
        let (stat, p) = ks_uniform_test(v)?;
        tests.push(TestResult {
            name: name.to_string(),
            statistic: stat,
            p_value: p,
            reject: p < per_test_level,
        });
        Ok(())
    };
    push_ks("ks_pit_first_marginal", &v1m, &mut tests)?;
    push_ks("ks_pit_second_marginal", &v2m, &mut tests)?;
    push_ks("ks_pit_second_given_first", &v2c, &mut tests)?;
    push_ks("ks_pit_first_given_second", &v1c, &mut tests)?;
    for (name, a, b) in [
        ("tau_first_marginal_vs_second_conditional", &v1m, &v2c),
        ("tau_second_marginal_vs_first_conditional", &v2m, &v1c),
    ] {
        let (z, p) = tau_independence_test(a, b)?;
        tests.push(TestResult {
            name: name.to_string(),
            statistic: z,
            p_value: p,
            reject: p < per_test_level,
        });
    }
    let reject = tests.iter().any(|t| t.reject);
    Ok(GofReport { n: samples.len(), level: LEVEL, per_test_level, tests, reject })
}

/// Marginal PIT of `xs` under the unnormalized bivariate density
/// `dens(t, s)`, where `t` is the coordinate of interest and `s` is
/// integrated out. Sorts the samples once and accumulates the CDF along
/// short quadrature segments.
fn marginal_pit<F: Fn(f64, f64) -> f64>(dens: F, xs: &[f64]) -> Vec<f64> {
    let g = |t: f64| integrate(|s| dens(t, s), INNER_NODES, LO, HI);
    let z_total = integrate(&g, OUTER_NODES, LO, HI);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut prev = LO;
    let mut cum = 0.0;
    for &idx in &order {
        let x = xs[idx].clamp(LO, HI);
        cum += integrate(&g, SEGMENT_NODES, prev, x);
        prev = x;
        out[idx] = (cum / z_total).clamp(0.0, 1.0);
    }
    out
}

/// Conditional PIT: for each pair, the CDF of `xs[r]` under the density
/// `dens(given[r], ·)` renormalized on the truncation window.
fn conditional_pit<F: Fn(f64, f64) -> f64>(dens: F, given: &[f64], xs: &[f64]) -> Vec<f64> {
    given
        .iter()
        .zip(xs)
        .map(|(&g, &x)| {
            let slice = |t: f64| dens(g, t);
            let total = integrate(&slice, INNER_NODES, LO, HI);
            let part = integrate(&slice, INNER_NODES, LO, x.clamp(LO, HI));
            (part / total).clamp(0.0, 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paircop::{Family, PairCopula};
    use crate::vine::testutil::dvine3;
    use crate::vine::{VineEdge, VineSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn indep_vine(d: usize) -> VineSpec {
        let mut trees = Vec::new();
        for t in 0..d - 1 {
            let mut tree = Vec::new();
            for i in 1..=(d - 1 - t) {
                let cond: Vec<usize> = (i + 1..i + t + 1).collect();
                tree.push(VineEdge::new(i, i + t + 1, cond, PairCopula::independence()));
            }
            trees.push(tree);
        }
        VineSpec::new(d, trees).unwrap()
    }

    #[test]
    fn pit_is_identity_under_independence() {
        let plan = indep_vine(3).compile().unwrap();
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 + 0.5) / 40.0).collect();
        let v = pit_univariate(&plan, 2, &[0.3, 0.7], &xs).unwrap();
        for (a, b) in xs.iter().zip(&v) {
            assert!((a - b).abs() < 1e-5, "independence PIT should be identity: {a} vs {b}");
        }
    }

    #[test]
    fn pit_flags_samples_from_the_wrong_target() {
        // Uniform draws tested against a strongly dependent conditional
        // are far from uniform after the PIT.
        let pair = PairCopula::new(Family::Gaussian, 0, vec![0.8]).unwrap();
        let spec = VineSpec::new(2, vec![vec![VineEdge::new(1, 2, vec![], pair)]]).unwrap();
        let plan = spec.compile().unwrap();
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        let v = pit_univariate(&plan, 1, &[0.85], &xs).unwrap();
        let (_, p) = ks_uniform_test(&v).unwrap();
        assert!(p < 1e-6, "wrong-target PIT should reject, p = {p}");
    }

    #[test]
    fn battery_clean_on_independent_uniform_pairs() {
        let plan = indep_vine(4).compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pairs: Vec<(f64, f64)> = (0..500)
            .map(|_| (0.999998 * rng.gen::<f64>() + 1e-6, 0.999998 * rng.gen::<f64>() + 1e-6))
            .collect();
        let report = rosenblatt_battery(&plan, (1, 3), &[0.4, 0.6], &pairs).unwrap();
        assert_eq!(report.tests.len(), 6);
        assert!((report.per_test_level - 0.05 / 6.0).abs() < 1e-15);
        assert!(
            !report.reject,
            "independence battery rejected: {:?}",
            report.tests
        );
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("ks_pit_first_marginal"));
    }

    #[test]
    fn battery_rejects_comonotone_pairs() {
        let plan = indep_vine(2).compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<(f64, f64)> = (0..300)
            .map(|_| {
                let u = 0.999998 * rng.gen::<f64>() + 1e-6;
                (u, u)
            })
            .collect();
        let report = rosenblatt_battery(&plan, (1, 2), &[], &pairs).unwrap();
        assert!(report.reject, "comonotone pairs must fail the independence part");
        for t in &report.tests {
            if t.name.starts_with("tau_") {
                assert!(t.reject, "tau test should reject: {t:?}");
            } else {
                assert!(!t.reject, "marginals of comonotone uniforms stay uniform: {t:?}");
            }
        }
    }

    /// Exact draws from the conditional of (u1, u3) given u2, produced by
    /// fixing the first Rosenblatt coordinate along the order [2, 1, 3]
    /// and pushing fresh uniforms through the inverse transform.
    fn exact_conditional_pairs(
        plan: &crate::vine::EvalPlan,
        u2: f64,
        n: usize,
        seed: u64,
    ) -> Vec<(f64, f64)> {
        let order = [2usize, 1, 3];
        let z0 = plan.rosenblatt(&[0.5, u2, 0.5], &order).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z = [z0[0], rng.gen::<f64>(), rng.gen::<f64>()];
                let u = plan.inverse_rosenblatt(&z, &order).unwrap();
                (u[0], u[2])
            })
            .collect()
    }

    #[test]
    fn battery_accepts_exact_conditional_draws() {
        let plan = dvine3().compile().unwrap();
        let pairs = exact_conditional_pairs(&plan, 0.3, 400, 99);
        let report = rosenblatt_battery(&plan, (1, 3), &[0.3], &pairs).unwrap();
        assert!(
            !report.reject,
            "exact conditional draws rejected: {:?}",
            report.tests
        );
    }

    #[test]
    fn battery_rejects_draws_with_wrong_conditioning() {
        let plan = dvine3().compile().unwrap();
        let pairs = exact_conditional_pairs(&plan, 0.25, 400, 100);
        let report = rosenblatt_battery(&plan, (1, 3), &[0.85], &pairs).unwrap();
        assert!(report.reject, "mismatched conditioning must be detected");
    }

    #[test]
    fn battery_validation_errors() {
        let plan = indep_vine(3).compile().unwrap();
        let pairs: Vec<(f64, f64)> = (0..50).map(|i| {
            let u = (i as f64 + 0.5) / 50.0;
            (u, 1.0 - u)
        }).collect();
        assert!(rosenblatt_battery(&plan, (1, 1), &[0.5], &pairs).is_err());
        assert!(rosenblatt_battery(&plan, (0, 2), &[0.5], &pairs).is_err());
        assert!(rosenblatt_battery(&plan, (1, 2), &[], &pairs).is_err());
        assert!(rosenblatt_battery(&plan, (1, 2), &[0.5], &pairs[..5]).is_err());
        let bad = vec![(0.5, 1.0); 50];
        assert!(rosenblatt_battery(&plan, (1, 2), &[0.5], &bad).is_err());
    }
}

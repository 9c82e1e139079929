//! No-U-Turn sampling from conditional distributions of a vine.
//!
//! A conditional target fixes a subset of the vine's coordinates and
//! treats the rest as free. Sampling runs on the log-odds scale, where
//! the support is all of R^k: the target density is the vine's copula
//! density times the Jacobian of the coordinatewise logistic map, so
//! draws mapped back through [`constrain`] live on the u scale.
//!
//! [`nuts_sample`] runs several independently seeded chains of a
//! multinomial no-U-turn sampler with dual-averaging step-size
//! adaptation and a windowed diagonal metric estimate, then returns the
//! thinned draws with per-chain statistics in a [`SampleBatch`].

use crate::error::{Error, Result};
use crate::paircop::clamp_unit;
use crate::vine::{EvalPlan, PartialPlan};

mod nuts;

pub use nuts::{leapfrog, nuts_sample, DualAveraging};

/// Log-odds of a single probability, with the argument clamped to the
/// open unit interval first.
pub(crate) fn logit(u: f64) -> f64 {
    let u = clamp_unit(u);
    u.ln() - (-u).ln_1p()
}

/// Standard logistic function, stable for large |z|.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Map points of the open unit hypercube to R^k by the coordinatewise
/// log-odds transform z = ln(u / (1 - u)).
pub fn unconstrain(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| logit(x)).collect()
}

/// Inverse of [`unconstrain`]: the coordinatewise logistic map back to
/// the open unit hypercube.
pub fn constrain(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&x| sigmoid(x)).collect()
}

/// Log density of a conditional distribution of a vine on the log-odds
/// scale: a block of coordinates is free, the rest are pinned to fixed
/// values. The reported value is the vine's copula log density at the
/// assembled point plus the log Jacobian of the logistic map, so it is
/// the (unnormalized) density of z when u follows the conditional law.
///
/// Construction precomputes everything that depends only on the pinned
/// coordinates, so repeated evaluations pay only for the free block.
pub struct ConditionalTarget<'p> {
    partial: PartialPlan<'p>,
    c1: Vec<usize>,
    c2: Vec<usize>,
    c2_vals: Vec<f64>,
}

impl<'p> ConditionalTarget<'p> {
    /// `c1_idx` (1-based, at least one entry) lists the free coordinates;
    /// the remaining coordinates, in ascending order, are pinned to
    /// `c2_vals`.
    pub fn new(plan: &'p EvalPlan, c1_idx: &[usize], c2_vals: &[f64]) -> Result<Self> {
        let d = plan.dim();
        if c1_idx.is_empty() {
            return Err(Error::InvalidArgument(
                "conditional target needs at least one free coordinate".into(),
            ));
        }
        let mut in_c1 = vec![false; d + 1];
        for &v in c1_idx {
            if v < 1 || v > d {
                return Err(Error::InvalidArgument(format!(
                    "free coordinate {v} out of range 1..={d}"
                )));
            }
            if std::mem::replace(&mut in_c1[v], true) {
                return Err(Error::InvalidArgument(format!("free coordinate {v} listed twice")));
            }
        }
        let c2: Vec<usize> = (1..=d).filter(|&v| !in_c1[v]).collect();
        if c2.len() != c2_vals.len() {
            return Err(Error::InvalidArgument(format!(
                "{} pinned coordinates but {} values",
                c2.len(),
                c2_vals.len()
            )));
        }
        if let Some(bad) = c2_vals.iter().find(|x| !(0.0 < **x && **x < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "pinned value {bad} outside the open unit interval"
            )));
        }
        let mut point = vec![0.5; d];
        for (k, &v) in c2.iter().enumerate() {
            point[v - 1] = c2_vals[k];
        }
        let partial = plan.partial(&point, c1_idx)?;
        Ok(ConditionalTarget { partial, c1: c1_idx.to_vec(), c2, c2_vals: c2_vals.to_vec() })
    }

    /// Number of free coordinates (the dimension sampled over).
    pub fn dim(&self) -> usize {
        self.c1.len()
    }

    /// Free coordinates, 1-based, in the order draws are reported.
    pub fn c1_idx(&self) -> &[usize] {
        &self.c1
    }

    /// Pinned coordinates, 1-based ascending.
    pub fn c2_idx(&self) -> &[usize] {
        &self.c2
    }

    /// Values the pinned coordinates are held at.
    pub fn c2_vals(&self) -> &[f64] {
        &self.c2_vals
    }

    /// Log target density at z.
    pub fn logpdf(&self, z: &[f64]) -> f64 {
        let u: Vec<f64> = z.iter().map(|&x| sigmoid(x)).collect();
        let mut value = self.partial.log_density(&u);
        for &zi in z {
            value -= softplus(-zi) + softplus(zi);
        }
        value
    }

    /// Log target density and its gradient at z. The gradient combines
    /// the vine's density gradient (chain rule through the logistic map)
    /// with the Jacobian term, whose z-derivative is 1 - 2u.
    pub fn logpdf_grad(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let u: Vec<f64> = z.iter().map(|&x| sigmoid(x)).collect();
        let (ll, mut g) = self.partial.log_density_grad(&u);
        let mut value = ll;
        for i in 0..z.len() {
            value -= softplus(-z[i]) + softplus(z[i]);
            g[i] = g[i] * u[i] * (1.0 - u[i]) + 1.0 - 2.0 * u[i];
        }
        (value, g)
    }
}

/// Tuning knobs for [`nuts_sample`]. `new` fills in the defaults: 4
/// chains, warmup equal to the post-warmup iteration count, thinning 10,
/// acceptance goal 0.8, maximum tree depth 10.
#[derive(Clone, Debug)]
pub struct NutsConfig {
    /// Post-warmup iterations per chain.
    pub iterations: usize,
    /// Adaptation iterations per chain before any draw is kept.
    pub warmup: usize,
    pub n_chains: usize,
    /// Keep every `thin`-th post-warmup iteration.
    pub thin: usize,
    /// Mean-acceptance goal for step-size adaptation.
    pub target_accept: f64,
    /// Trajectory doubling cap; at most 2^depth leapfrog steps per side.
    pub max_tree_depth: usize,
    pub seed: u64,
}

impl NutsConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        NutsConfig {
            iterations,
            warmup: iterations,
            n_chains: 4,
            thin: 10,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.thin < 1 {
            return Err(Error::InvalidArgument("thinning stride must be at least 1".into()));
        }
        if self.iterations < self.thin {
            return Err(Error::InvalidArgument(format!(
                "{} iterations cannot support thinning stride {}",
                self.iterations, self.thin
            )));
        }
        if self.warmup < 1 {
            return Err(Error::InvalidArgument("warmup must run at least one iteration".into()));
        }
        if self.n_chains < 1 {
            return Err(Error::InvalidArgument("need at least one chain".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "acceptance goal {} outside (0,1)",
                self.target_accept
            )));
        }
        if self.max_tree_depth < 1 || self.max_tree_depth > 15 {
            return Err(Error::InvalidArgument(format!(
                "tree depth cap {} outside 1..=15",
                self.max_tree_depth
            )));
        }
        Ok(())
    }
}

/// One chain's kept draws and adaptation outcome.
#[derive(Clone, Debug)]
pub struct ChainRun {
    /// Kept draws on the u scale: `iterations / thin` rows, one column
    /// per free coordinate in `c1_idx` order.
    pub draws: Vec<Vec<f64>>,
    /// RNG stream index this chain consumed (chain index).
    pub stream: u64,
    /// Adapted leapfrog step size.
    pub step_size: f64,
    /// Adapted diagonal metric (per-coordinate posterior variance scale).
    pub metric: Vec<f64>,
    /// Mean acceptance statistic over post-warmup iterations. Because
    /// sampling runs at the smoothed (averaged) step size, this usually
    /// lands at or somewhat above the adaptation goal.
    pub accept_mean: f64,
    /// Mean acceptance statistic over the last warmup adaptation window,
    /// where the step size is actively controlled: the adaptation
    /// contract is that this sits within 0.1 of the goal.
    pub warmup_accept_mean: f64,
    /// Divergent post-warmup transitions.
    pub divergences: usize,
    /// Post-warmup iterations run (denominator for the divergence rate).
    pub iterations: usize,
}

/// Draws and per-chain statistics from one [`nuts_sample`] run.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    /// Sampled coordinates, 1-based (column order of the draws).
    pub c1_idx: Vec<usize>,
    /// Pinned coordinates, 1-based ascending, and their values.
    pub c2_idx: Vec<usize>,
    pub c2_vals: Vec<f64>,
    pub config: NutsConfig,
    pub chains: Vec<ChainRun>,
}

impl SampleBatch {
    /// Kept draws per chain.
    pub fn kept_per_chain(&self) -> usize {
        self.config.iterations / self.config.thin
    }

    /// All chains' draws concatenated in chain order.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.chains.iter().flat_map(|c| c.draws.iter().cloned()).collect()
    }

    /// One coordinate (by column index) pooled across chains.
    pub fn pooled_coord(&self, col: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.draws.iter().map(move |row| row[col])).collect()
    }

    /// Fraction of post-warmup transitions that diverged, pooled.
    pub fn divergence_rate(&self) -> f64 {
        let total: usize = self.chains.iter().map(|c| c.iterations).sum();
        if total == 0 {
            return 0.0;
        }
        let div: usize = self.chains.iter().map(|c| c.divergences).sum();
        div as f64 / total as f64
    }

    /// True when more than 10% of post-warmup transitions diverged — the
    /// draws are suspect and the run deserves a smaller step size.
    pub fn divergence_flag(&self) -> bool {
        self.divergence_rate() > 0.10
    }
}

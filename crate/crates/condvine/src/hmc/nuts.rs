//! The no-U-turn sampler: leapfrog integration, dual-averaging step-size
//! adaptation, windowed diagonal-metric estimation, multinomial
//! trajectory sampling with doubling, and the multi-chain driver.

use super::{logit, sigmoid, ChainRun, ConditionalTarget, NutsConfig, SampleBatch};
use crate::error::{Error, Result};
use crate::math::special::norm_ppf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Energy gain above which a trajectory is declared divergent.
const DIVERGENCE_ENERGY: f64 = 1000.0;
/// Shrinkage target for the diagonal metric regularization.
const METRIC_PRIOR: f64 = 1e-3;

/// A position with its cached target value and gradient.
#[derive(Clone)]
struct Point {
    z: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

/// A point of phase space: position plus momentum.
#[derive(Clone)]
struct PhasePoint {
    pt: Point,
    p: Vec<f64>,
}

fn hamiltonian(s: &PhasePoint, metric: &[f64]) -> f64 {
    let mut kinetic = 0.0;
    for i in 0..s.p.len() {
        kinetic += metric[i] * s.p[i] * s.p[i];
    }
    -s.pt.value + 0.5 * kinetic
}

/// One leapfrog step with a diagonal metric, reusing the cached gradient:
/// half momentum kick, full position drift along metric ⊙ p, half kick.
fn leapfrog_step(
    target: &ConditionalTarget,
    s: &PhasePoint,
    step: f64,
    metric: &[f64],
) -> PhasePoint {
    let k = s.p.len();
    let mut p = s.p.clone();
    for i in 0..k {
        p[i] += 0.5 * step * s.pt.grad[i];
    }
    let mut z = s.pt.z.clone();
    for i in 0..k {
        z[i] += step * metric[i] * p[i];
    }
    let (value, grad) = target.logpdf_grad(&z);
    for i in 0..k {
        p[i] += 0.5 * step * grad[i];
    }
    PhasePoint { pt: Point { z, value, grad }, p }
}

/// One leapfrog step of the Hamiltonian flow for `target`: returns the
/// new position and momentum. `metric` is the diagonal inverse-mass
/// vector (pass all ones for the identity). The map is exactly
/// reversible: stepping from the result with negated momentum returns
/// the start.
pub fn leapfrog(
    target: &ConditionalTarget,
    z: &[f64],
    momentum: &[f64],
    step_size: f64,
    metric: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (value, grad) = target.logpdf_grad(z);
    let start =
        PhasePoint { pt: Point { z: z.to_vec(), value, grad }, p: momentum.to_vec() };
    let out = leapfrog_step(target, &start, step_size, metric);
    (out.pt.z, out.p)
}

/// Dual-averaging step-size adaptation driving the mean acceptance
/// statistic toward a goal: the running shortfall is averaged with
/// weight 1/(m+10), the log step size responds with gain sqrt(m)/0.05
/// around an anchor at 10x the initial step, and the reported adapted
/// value is an m^-0.75-weighted running average.
pub struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    m: f64,
    goal: f64,
}

impl DualAveraging {
    pub fn new(initial_step: f64, goal: f64) -> Self {
        DualAveraging {
            mu: (10.0 * initial_step).ln(),
            log_eps: initial_step.ln(),
            log_eps_bar: initial_step.ln(),
            h_bar: 0.0,
            m: 0.0,
            goal,
        }
    }

    /// Feed one acceptance statistic; returns the step size to use next.
    pub fn update(&mut self, accept: f64) -> f64 {
        self.m += 1.0;
        let frac = 1.0 / (self.m + 10.0);
        self.h_bar = (1.0 - frac) * self.h_bar + frac * (self.goal - accept.clamp(0.0, 1.0));
        self.log_eps = self.mu - self.m.sqrt() / 0.05 * self.h_bar;
        let w = self.m.powf(-0.75);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        self.log_eps.exp()
    }

    /// The step size the adaptation has settled on (running average).
    pub fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }

    /// The noisy current step size (last `update` output).
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }
}

fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return norm_ppf(u);
        }
    }
}

fn sample_momentum<R: Rng>(rng: &mut R, metric: &[f64]) -> Vec<f64> {
    metric.iter().map(|&m| std_normal(rng) / m.sqrt()).collect()
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Generalized U-turn check: the trajectory keeps expanding only while
/// the summed momentum points forward along the velocity at both ends.
fn no_u_turn(rho: &[f64], p_lo: &[f64], p_hi: &[f64], metric: &[f64]) -> bool {
    let (mut lo, mut hi) = (0.0, 0.0);
    for i in 0..rho.len() {
        lo += rho[i] * metric[i] * p_lo[i];
        hi += rho[i] * metric[i] * p_hi[i];
    }
    lo > 0.0 && hi > 0.0
}

/// A finished subtree: its outward end, the momenta at both boundaries,
/// a multinomially selected candidate, and summary statistics.
struct Subtree {
    end: PhasePoint,
    p_inner: Vec<f64>,
    sample: Point,
    log_weight: f64,
    rho: Vec<f64>,
    ok: bool,
    divergent: bool,
    accept_sum: f64,
    leaves: f64,
}

/// Build 2^depth leapfrog steps outward from `from` in direction `dir`,
/// sampling one candidate with probability proportional to its density
/// relative to the initial energy `h0`.
#[allow(clippy::too_many_arguments)]
fn build_subtree<R: Rng>(
    target: &ConditionalTarget,
    rng: &mut R,
    depth: usize,
    from: &PhasePoint,
    dir: f64,
    step: f64,
    metric: &[f64],
    h0: f64,
) -> Subtree {
    if depth == 0 {
        let s = leapfrog_step(target, from, dir * step, metric);
        let h = hamiltonian(&s, metric);
        let log_weight = h0 - h;
        // NaN energies count as divergent
        let divergent = !(h - h0 <= DIVERGENCE_ENERGY);
        let accept = if log_weight.is_nan() { 0.0 } else { log_weight.min(0.0).exp() };
        return Subtree {
            p_inner: s.p.clone(),
            rho: s.p.clone(),
            sample: s.pt.clone(),
            log_weight: if divergent { f64::NEG_INFINITY } else { log_weight },
            end: s,
            ok: !divergent,
            divergent,
            accept_sum: accept,
            leaves: 1.0,
        };
    }
    let first = build_subtree(target, rng, depth - 1, from, dir, step, metric, h0);
    if !first.ok {
        return first;
    }
    let mut second = build_subtree(target, rng, depth - 1, &first.end, dir, step, metric, h0);
    second.accept_sum += first.accept_sum;
    second.leaves += first.leaves;
    if !second.ok {
        return second;
    }
    let log_weight = log_sum_exp(first.log_weight, second.log_weight);
    let sample = if rng.gen::<f64>() < (second.log_weight - log_weight).exp() {
        second.sample
    } else {
        first.sample
    };
    let rho: Vec<f64> = first.rho.iter().zip(&second.rho).map(|(a, b)| a + b).collect();
    let ok = no_u_turn(&rho, &first.p_inner, &second.end.p, metric);
    Subtree {
        end: second.end,
        p_inner: first.p_inner,
        sample,
        log_weight,
        rho,
        ok,
        divergent: false,
        accept_sum: second.accept_sum,
        leaves: second.leaves,
    }
}

struct Transition {
    next: Point,
    accept: f64,
    divergent: bool,
}

/// One no-U-turn transition: sample a momentum, double the trajectory in
/// random directions until a U-turn, divergence, or the depth cap, and
/// return a multinomial draw from the visited states.
fn transition<R: Rng>(
    target: &ConditionalTarget,
    rng: &mut R,
    current: &Point,
    step: f64,
    metric: &[f64],
    max_depth: usize,
) -> Transition {
    let p0 = sample_momentum(rng, metric);
    let start = PhasePoint { pt: current.clone(), p: p0.clone() };
    let h0 = hamiltonian(&start, metric);
    let mut minus = start.clone();
    let mut plus = start;
    let mut sample = current.clone();
    let mut log_weight = 0.0;
    let mut rho = p0;
    let mut accept_sum = 0.0;
    let mut leaves = 0.0;
    let mut divergent = false;
    for depth in 0..max_depth {
        let dir: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let from = if dir > 0.0 { &plus } else { &minus };
        let tree = build_subtree(target, rng, depth, from, dir, step, metric, h0);
        accept_sum += tree.accept_sum;
        leaves += tree.leaves;
        if !tree.ok {
            divergent |= tree.divergent;
            break;
        }
        // biased progressive sampling: favor the fresh half of the
        // doubled trajectory
        if rng.gen::<f64>() < (tree.log_weight - log_weight).exp() {
            sample = tree.sample;
        }
        log_weight = log_sum_exp(log_weight, tree.log_weight);
        for i in 0..rho.len() {
            rho[i] += tree.rho[i];
        }
        if dir > 0.0 {
            plus = tree.end;
        } else {
            minus = tree.end;
        }
        if !no_u_turn(&rho, &minus.p, &plus.p, metric) {
            break;
        }
    }
    Transition { next: sample, accept: accept_sum / leaves.max(1.0), divergent }
}

/// Double/halve the step size until a single leapfrog step's acceptance
/// probability crosses 1/2.
fn find_initial_step<R: Rng>(
    target: &ConditionalTarget,
    rng: &mut R,
    start: &Point,
    metric: &[f64],
) -> f64 {
    let p = sample_momentum(rng, metric);
    let s0 = PhasePoint { pt: start.clone(), p };
    let h0 = hamiltonian(&s0, metric);
    let log_half = 0.5f64.ln();
    let log_ratio = |eps: f64| {
        let s = leapfrog_step(target, &s0, eps, metric);
        let r = h0 - hamiltonian(&s, metric);
        if r.is_nan() {
            f64::NEG_INFINITY
        } else {
            r
        }
    };
    let mut eps = 1.0;
    let up = log_ratio(eps) > log_half;
    for _ in 0..60 {
        let next = if up { eps * 2.0 } else { eps * 0.5 };
        if (log_ratio(next) > log_half) != up || !(1e-10..=1e7).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}

/// Adaptation phases: a step-size-only opening, doubling metric windows,
/// and a step-size-only closing buffer. Short warmups collapse to
/// proportional phases; very short ones adapt the step size only.
fn warmup_windows(warmup: usize) -> (usize, Vec<usize>, usize) {
    if warmup < 20 {
        return (warmup, Vec::new(), 0);
    }
    if warmup < 150 {
        let init = (warmup * 15 / 100).max(1);
        let term = (warmup * 10 / 100).max(1);
        return (init, vec![warmup - init - term], term);
    }
    let (init, term) = (75, 50);
    let mut remaining = warmup - init - term;
    let mut windows = Vec::new();
    let mut size = 25;
    while remaining > 0 {
        if remaining < 2 * size {
            windows.push(remaining);
            break;
        }
        windows.push(size);
        remaining -= size;
        size *= 2;
    }
    (init, windows, term)
}

/// Per-coordinate variance of the window draws, regularized toward a
/// small constant so early windows cannot collapse the metric.
fn estimate_metric(draws: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = draws.len();
    let nf = n as f64;
    let mut metric = vec![0.0; k];
    for (i, m) in metric.iter_mut().enumerate() {
        let mean = draws.iter().map(|z| z[i]).sum::<f64>() / nf;
        let var =
            draws.iter().map(|z| (z[i] - mean) * (z[i] - mean)).sum::<f64>() / (nf - 1.0);
        *m = nf / (nf + 5.0) * var + 5.0 / (nf + 5.0) * METRIC_PRIOR;
    }
    metric
}

fn run_chain(target: &ConditionalTarget, cfg: &NutsConfig, chain: u64) -> Result<ChainRun> {
    let k = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain);

    let mut current: Option<Point> = None;
    for _ in 0..100 {
        let z: Vec<f64> = (0..k).map(|_| logit(0.1 + 0.8 * rng.gen::<f64>())).collect();
        let (value, grad) = target.logpdf_grad(&z);
        if value.is_finite() && grad.iter().all(|g| g.is_finite()) {
            current = Some(Point { z, value, grad });
            break;
        }
    }
    let mut current = current.ok_or_else(|| Error::InitFailure {
        attempts: 100,
        detail: format!(
            "no finite target density found for chain {chain} near the center of the cube"
        ),
    })?;

    let mut metric = vec![1.0; k];
    let mut step = find_initial_step(target, &mut rng, &current, &metric);
    let mut da = DualAveraging::new(step, cfg.target_accept);

    let (init_buf, windows, term_buf) = warmup_windows(cfg.warmup);
    let mut window_ends = Vec::with_capacity(windows.len());
    let mut acc = init_buf;
    for w in &windows {
        acc += w;
        window_ends.push(acc);
    }
    let collect_from = init_buf;
    let collect_to = cfg.warmup - term_buf;

    let mut window_draws: Vec<Vec<f64>> = Vec::new();
    let mut segment_accept = 0.0;
    let mut segment_len = 0usize;
    for it in 1..=cfg.warmup {
        let t = transition(target, &mut rng, &current, step, &metric, cfg.max_tree_depth);
        current = t.next;
        step = da.update(t.accept);
        segment_accept += t.accept;
        segment_len += 1;
        if it > collect_from && it <= collect_to {
            window_draws.push(current.z.clone());
        }
        if window_ends.contains(&it) && window_draws.len() >= 2 {
            metric = estimate_metric(&window_draws, k);
            window_draws.clear();
            // the metric changed scale: re-search the step size and
            // restart its adaptation from there
            step = find_initial_step(target, &mut rng, &current, &metric);
            da = DualAveraging::new(step, cfg.target_accept);
            segment_accept = 0.0;
            segment_len = 0;
        }
    }
    let warmup_accept_mean = segment_accept / (segment_len.max(1)) as f64;
    let step = da.adapted();

    let kept = cfg.iterations / cfg.thin;
    let mut draws = Vec::with_capacity(kept);
    let mut accept_sum = 0.0;
    let mut divergences = 0usize;
    for it in 1..=cfg.iterations {
        let t = transition(target, &mut rng, &current, step, &metric, cfg.max_tree_depth);
        current = t.next;
        accept_sum += t.accept;
        divergences += t.divergent as usize;
        if it % cfg.thin == 0 && draws.len() < kept {
            draws.push(current.z.iter().map(|&z| sigmoid(z)).collect());
        }
    }

    Ok(ChainRun {
        draws,
        stream: chain,
        step_size: step,
        metric,
        accept_mean: accept_sum / cfg.iterations as f64,
        warmup_accept_mean,
        divergences,
        iterations: cfg.iterations,
    })
}

/// Run `config.n_chains` no-U-turn chains against `target`, concurrently,
/// each on its own RNG stream derived from the seed and the chain index.
/// Results are ordered by chain index and fully determined by the
/// configuration, independent of scheduling.
pub fn nuts_sample(target: &ConditionalTarget, config: &NutsConfig) -> Result<SampleBatch> {
    config.validate()?;
    let runs: Vec<Result<ChainRun>> = (0..config.n_chains as u64)
        .into_par_iter()
        .map(|chain| run_chain(target, config, chain))
        .collect();
    let mut chains = Vec::with_capacity(runs.len());
    for r in runs {
        chains.push(r?);
    }
    Ok(SampleBatch {
        c1_idx: target.c1_idx().to_vec(),
        c2_idx: target.c2_idx().to_vec(),
        c2_vals: target.c2_vals().to_vec(),
        config: config.clone(),
        chains,
    })
}

//! Convergence diagnostics for multi-chain MCMC output: rank-normalized
//! split R-hat and effective sample size with Geyer's initial-monotone
//! truncation of the autocorrelation sum.

use crate::error::{Error, Result};
use crate::hmc::SampleBatch;
use crate::math::special::norm_ppf;
use serde::Serialize;

/// Potential scale reduction factor on rank-normalized split chains.
///
/// Each chain is split in half (the middle draw is dropped when the length
/// is odd), all halves are pooled and replaced by normal scores of their
/// average ranks, and the classic between/within variance ratio
/// √(((n−1)/n · W + B/n) / W) is returned.
///
/// Conventions for degenerate input: if every draw across all chains is
/// identical the statistic is defined as 1.0, and if chains are internally
/// constant but differ from each other it is +∞.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let seqs = rank_normalized_splits(chains, "split_rhat")?;
    if all_internally_constant(&seqs) {
        let first = seqs[0][0];
        return Ok(if seqs.iter().all(|s| s[0] == first) { 1.0 } else { f64::INFINITY });
    }
    let (w, var_plus) = within_and_total(&seqs);
    if w == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((var_plus / w).sqrt())
}

/// Effective sample size on rank-normalized split chains.
///
/// Per-sequence autocovariances are combined across chains, converted to
/// autocorrelations against the total-variance estimate, summed in Geyer
/// pairs (truncated at the first non-positive pair and forced monotone
/// non-increasing), and the pooled draw count is divided by the resulting
/// integrated autocorrelation time. The time is floored at 1/log10(N) so
/// strongly antithetic chains cannot report unbounded ESS. Chains with no
/// within-chain variation carry no information and yield an ESS of 0.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let seqs = rank_normalized_splits(chains, "ess")?;
    if all_internally_constant(&seqs) {
        return Ok(0.0);
    }
    let (w, var_plus) = within_and_total(&seqs);
    let m = seqs.len();
    let n = seqs[0].len();
    let total = (m * n) as f64;

    // Mean over sequences of the lag-t autocovariance (1/n normalization).
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n as f64).collect();
    let mut mean_acov = vec![0.0; n];
    for (s, &mu) in seqs.iter().zip(&means) {
        for t in 0..n {
            let mut acc = 0.0;
            for i in 0..n - t {
                acc += (s[i] - mu) * (s[i + t] - mu);
            }
            mean_acov[t] += acc / n as f64;
        }
    }
    for a in &mut mean_acov {
        *a /= m as f64;
    }

    // Autocorrelations rho_t = 1 − (W − mean_acov_t)/var_plus, Geyer pairs.
    let rho = |t: usize| 1.0 - (w - mean_acov[t]) / var_plus;
    let mut pair_sums = Vec::new();
    let mut k = 0;
    while 2 * k + 1 < n {
        let p = rho(2 * k) + rho(2 * k + 1);
        if p <= 0.0 {
            break;
        }
        pair_sums.push(p);
        k += 1;
    }
    for i in 1..pair_sums.len() {
        if pair_sums[i] > pair_sums[i - 1] {
            pair_sums[i] = pair_sums[i - 1];
        }
    }
    let tau = (-1.0 + 2.0 * pair_sums.iter().sum::<f64>()).max(1.0 / total.log10());
    Ok(total / tau)
}

/// Per-coordinate convergence summary of one coordinate block.
#[derive(Clone, Debug, Serialize)]
pub struct CoordinateDiagnostics {
    /// Position of the coordinate within the sampled block (0-based).
    pub coordinate: usize,
    pub rhat: f64,
    pub ess: f64,
    /// ESS divided by the pooled number of kept draws.
    pub ess_per_draw: f64,
}

/// Convergence and stability summary for a sampling run: rank-normalized
/// split R-hat and ESS per coordinate, plus divergence accounting.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub coordinates: Vec<CoordinateDiagnostics>,
    pub n_chains: usize,
    pub kept_per_chain: usize,
    pub pooled_draws: usize,
    /// Post-warmup divergent transitions per chain.
    pub divergences: Vec<usize>,
    /// Divergent fraction of all post-warmup transitions.
    pub divergence_rate: f64,
    /// True when the divergence rate exceeds the 10% advisory threshold.
    pub divergence_flag: bool,
    pub warnings: Vec<String>,
}

impl DiagnosticsReport {
    /// Largest R-hat across coordinates (NaN-free; +∞ propagates).
    pub fn max_rhat(&self) -> f64 {
        self.coordinates.iter().map(|c| c.rhat).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest ESS across coordinates.
    pub fn min_ess(&self) -> f64 {
        self.coordinates.iter().map(|c| c.ess).fold(f64::INFINITY, f64::min)
    }
}

/// Compute per-coordinate split R-hat and ESS for a sampling batch.
pub fn diagnostics(batch: &SampleBatch) -> Result<DiagnosticsReport> {
    let dim = batch.c1_idx.len();
    let kept = batch.kept_per_chain();
    let mut coords = Vec::with_capacity(dim);
    let mut warnings = Vec::new();
    let pooled_draws = kept * batch.chains.len();
    for k in 0..dim {
        let chains: Vec<Vec<f64>> = batch
            .chains
            .iter()
            .map(|c| c.draws.iter().map(|row| row[k]).collect())
            .collect();
        let rhat = split_rhat(&chains)?;
        let e = ess(&chains)?;
        if e == 0.0 {
            warnings.push(format!("coordinate {k}: constant draws (ESS defined as 0)"));
        }
        if rhat.is_infinite() {
            warnings.push(format!("coordinate {k}: chains constant at distinct values"));
        }
        coords.push(CoordinateDiagnostics {
            coordinate: k,
            rhat,
            ess: e,
            ess_per_draw: e / pooled_draws as f64,
        });
    }
    let divergences: Vec<usize> = batch.chains.iter().map(|c| c.divergences).collect();
    Ok(DiagnosticsReport {
        coordinates: coords,
        n_chains: batch.chains.len(),
        kept_per_chain: kept,
        pooled_draws,
        divergences,
        divergence_rate: batch.divergence_rate(),
        divergence_flag: batch.divergence_flag(),
        warnings,
    })
}

/// Split every chain in half and replace the pooled draws by normal scores
/// of their average ranks, z = Φ⁻¹((r − 3/8)/(S + 1/4)).
fn rank_normalized_splits(chains: &[Vec<f64>], what: &str) -> Result<Vec<Vec<f64>>> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{what} needs at least 2 chains, got {}",
            chains.len()
        )));
    }
    let len = chains[0].len();
    for (k, c) in chains.iter().enumerate() {
        if c.len() != len {
            return Err(Error::InvalidArgument(format!(
                "{what}: chain {k} has {} draws but chain 0 has {len}",
                c.len()
            )));
        }
        if c.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "{what} needs at least 4 draws per chain, chain {k} has {}",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{what}: chain {k} contains non-finite draws"
            )));
        }
    }
    let half = len / 2;
    let mut seqs: Vec<Vec<f64>> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        seqs.push(c[..half].to_vec());
        seqs.push(c[len - half..].to_vec());
    }

    // Average ranks of the pooled values (ties share their mean rank).
    let total = 2 * chains.len() * half;
    let mut order: Vec<(usize, usize)> = (0..seqs.len())
        .flat_map(|j| (0..half).map(move |i| (j, i)))
        .collect();
    order.sort_by(|a, b| seqs[a.0][a.1].total_cmp(&seqs[b.0][b.1]));
    let mut ranks = vec![vec![0.0; half]; seqs.len()];
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        let v = seqs[order[start].0][order[start].1];
        while end < total && seqs[order[end].0][order[end].1] == v {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0; // mean of 1-based ranks start+1..=end
        for &(j, i) in &order[start..end] {
            ranks[j][i] = avg;
        }
        start = end;
    }
    let s = total as f64;
    for row in &mut ranks {
        for r in row.iter_mut() {
            *r = norm_ppf((*r - 0.375) / (s + 0.25));
        }
    }
    Ok(ranks)
}

/// True when every sequence is constant within itself — exact-arithmetic
/// degeneracy detection, since near-zero variances from rounding must not
/// trigger the documented conventions.
fn all_internally_constant(seqs: &[Vec<f64>]) -> bool {
    seqs.iter().all(|s| s.iter().all(|&v| v == s[0]))
}

/// Within-sequence variance W and the total-variance estimate
/// (n−1)/n · W + B/n for a set of equal-length sequences.
fn within_and_total(seqs: &[Vec<f64>]) -> (f64, f64) {
    let m = seqs.len();
    let n = seqs[0].len();
    let means: Vec<f64> = seqs.iter().map(|s| s.iter().sum::<f64>() / n as f64).collect();
    let w = seqs
        .iter()
        .zip(&means)
        .map(|(s, &mu)| s.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64)
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = n as f64 * means.iter().map(|&mu| (mu - grand) * (mu - grand)).sum::<f64>()
        / (m - 1) as f64;
    let var_plus = (n - 1) as f64 / n as f64 * w + b / n as f64;
    (w, var_plus)
}

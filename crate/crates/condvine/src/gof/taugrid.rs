//! Conditional Kendall-τ surfaces: estimate the rank correlation of one
//! variable pair across a grid of conditioning values by repeated
//! conditional sampling, reporting a mean and an empirical band per cell.

use crate::error::{Error, Result};
use crate::gof::kendall_tau;
use crate::hmc::{nuts_sample, ConditionalTarget, NutsConfig};
use crate::math::splitmix64;
use crate::vine::EvalPlan;
use rayon::prelude::*;
use serde::Serialize;

/// One conditioning cell of a [`TauGrid`].
#[derive(Clone, Debug, Serialize)]
pub struct TauGridCell {
    pub row: usize,
    pub col: usize,
    /// Conditioning value on the first grid axis (variable `c2_idx.0`).
    pub c2_first: f64,
    /// Conditioning value on the second grid axis (variable `c2_idx.1`).
    pub c2_second: f64,
    /// Mean of the per-replication τ estimates.
    pub mean_tau: f64,
    /// Empirical 5% and 95% quantiles of the per-replication estimates.
    pub q05: f64,
    pub q95: f64,
    /// Replications that completed and contributed to the summaries.
    pub reps: usize,
    /// True when every replication of this cell failed; the numeric
    /// summaries are NaN in that case and the run continues elsewhere.
    pub failed: bool,
}

/// Conditional Kendall-τ estimates of one variable pair over a grid of
/// conditioning values.
#[derive(Clone, Debug, Serialize)]
pub struct TauGrid {
    /// The sampled pair (1-based variable indices).
    pub c1_idx: (usize, usize),
    /// The conditioning pair, first/second grid axis.
    pub c2_idx: (usize, usize),
    pub n_rows: usize,
    pub n_cols: usize,
    /// Replications attempted per cell.
    pub reps: usize,
    /// Row-major cells, `row * n_cols + col`.
    pub cells: Vec<TauGridCell>,
}

impl TauGrid {
    pub fn cell(&self, row: usize, col: usize) -> &TauGridCell {
        &self.cells[row * self.n_cols + col]
    }
}

/// Kendall-τ of the pair `c1_idx` conditional on the pair `c2_idx`, over
/// the grid `grid_first` × `grid_second` of conditioning values, for a
/// four-variable structure.
///
/// Each cell runs `reps` independent sampling replications; each
/// replication draws with an own deterministic seed derived from
/// `config.seed`, the cell position, and the replication index, so
/// results do not depend on scheduling order. A replication's τ is the
/// sample Kendall-τ of the pooled draws. Cells where every replication
/// fails are marked `failed` and the run continues.
pub fn conditional_tau_grid(
    plan: &EvalPlan,
    c1_idx: (usize, usize),
    c2_idx: (usize, usize),
    grid_first: &[f64],
    grid_second: &[f64],
    config: &NutsConfig,
    reps: usize,
) -> Result<TauGrid> {
    if plan.dim() != 4 {
        return Err(Error::InvalidArgument(format!(
            "conditional_tau_grid expects a 4-variable structure, got {}",
            plan.dim()
        )));
    }
    let mut seen = [false; 4];
    for idx in [c1_idx.0, c1_idx.1, c2_idx.0, c2_idx.1] {
        if !(1..=4).contains(&idx) || seen[idx - 1] {
            return Err(Error::InvalidArgument(format!(
                "conditional_tau_grid: indices must partition 1..=4, got \
                 c1=({},{}) c2=({},{})",
                c1_idx.0, c1_idx.1, c2_idx.0, c2_idx.1
            )));
        }
        seen[idx - 1] = true;
    }
    if grid_first.is_empty() || grid_second.is_empty() {
        return Err(Error::InvalidArgument("conditional_tau_grid: empty grid axis".into()));
    }
    for &v in grid_first.iter().chain(grid_second) {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "conditional_tau_grid: conditioning value {v} outside (0,1)"
            )));
        }
    }
    if reps < 1 {
        return Err(Error::InvalidArgument("conditional_tau_grid: reps must be at least 1".into()));
    }
    let pooled = config.n_chains * (config.iterations / config.thin);
    if pooled < 10 {
        return Err(Error::InvalidArgument(format!(
            "conditional_tau_grid: configuration keeps only {pooled} pooled draws per \
             replication; need at least 10 for a τ estimate"
        )));
    }

    let n_rows = grid_first.len();
    let n_cols = grid_second.len();
    let c1 = [c1_idx.0, c1_idx.1];
    // Conditioning values must be handed over in ascending variable order.
    let swap_c2 = c2_idx.0 > c2_idx.1;

    let tasks: Vec<(usize, usize)> = (0..n_rows * n_cols)
        .flat_map(|cell| (0..reps).map(move |rep| (cell, rep)))
        .collect();
    let results: Vec<(usize, Result<f64>)> = tasks
        .into_par_iter()
        .map(|(cell, rep)| {
            let (row, col) = (cell / n_cols, cell % n_cols);
            let pair = (grid_first[row], grid_second[col]);
            let c2_vals = if swap_c2 { [pair.1, pair.0] } else { [pair.0, pair.1] };
            let tau = (|| {
                let target = ConditionalTarget::new(plan, &c1, &c2_vals)?;
                let mut cfg = config.clone();
                cfg.seed = derive_seed(config.seed, cell as u64, rep as u64);
                let batch = nuts_sample(&target, &cfg)?;
                Ok(kendall_tau(&batch.pooled_coord(0), &batch.pooled_coord(1)))
            })();
            (cell, tau)
        })
        .collect();

    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); n_rows * n_cols];
    for (cell, tau) in results {
        if let Ok(t) = tau {
            per_cell[cell].push(t);
        }
    }
    let cells = per_cell
        .into_iter()
        .enumerate()
        .map(|(cell, taus)| {
            let (row, col) = (cell / n_cols, cell % n_cols);
            let (mean_tau, q05, q95, ok) = summarize(&taus);
            TauGridCell {
                row,
                col,
                c2_first: grid_first[row],
                c2_second: grid_second[col],
                mean_tau,
                q05,
                q95,
                reps: ok,
                failed: ok == 0,
            }
        })
        .collect();
    Ok(TauGrid { c1_idx, c2_idx, n_rows, n_cols, reps, cells })
}

/// Mean and empirical 5%/95% band of the replication estimates; NaN
/// summaries when no replication succeeded.
fn summarize(taus: &[f64]) -> (f64, f64, f64, usize) {
    if taus.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, 0);
    }
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let pick = |p: f64| sorted[((k - 1) as f64 * p).round() as usize];
    let mean = sorted.iter().sum::<f64>() / k as f64;
    (mean, pick(0.05), pick(0.95), k)
}

/// Hash-combine a base seed with cell and replication indices through
/// SplitMix64 steps, giving scheduling-independent per-task streams.
fn derive_seed(base: u64, cell: u64, rep: u64) -> u64 {
    let mut s = base;
    let a = splitmix64(&mut s);
    let mut s = a ^ cell;
    let b = splitmix64(&mut s);
    let mut s = b ^ rep;
    splitmix64(&mut s)
}

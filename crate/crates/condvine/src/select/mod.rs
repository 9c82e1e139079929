//! Model selection: pseudo-observations, pairwise family fits, and
//! automatic vine-structure construction from data.
//!
//! The entry points are [`pseudo_obs`] (rank-transform raw data to the unit
//! hypercube), [`fit_pair`] (pick a pair-copula family by AIC),
//! [`dissmann_fit`] (greedy maximum-spanning-tree vine construction), and
//! [`pc_forward_structure`] (a response-centred first tree chosen by
//! comparing plain against partial correlations).

mod fit;
mod pcorr;
mod structure;

pub use fit::{fit_pair, CandidateFit, FitOptions, PairFit, MIN_FIT_OBS};
pub use pcorr::{
    normal_scores, partial_correlation, partial_correlation_residual, pearson_correlation,
};
pub use structure::{dissmann_fit, pc_forward_structure, EdgeFit, FitReport, PcDecision};

use crate::error::{Error, Result};

/// Minimum number of observations accepted by [`pseudo_obs`].
pub const MIN_OBS: usize = 10;

/// A rectangular block of pseudo-observations: `d` columns of length `n`,
/// every value strictly inside the unit interval.
///
/// Columns are indexed 0-based internally; variable labels used by the
/// vine-construction routines are 1-based, matching
/// [`crate::vine::VineEdge`].
#[derive(Debug, Clone)]
pub struct PseudoData {
    cols: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl PseudoData {
    /// Wraps columns that already live in the open unit interval.
    ///
    /// All columns must share one length of at least [`MIN_OBS`]; every
    /// value must be finite and in `(0, 1)`. Default column names are
    /// `u1, u2, ...`.
    pub fn new(cols: Vec<Vec<f64>>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidArgument(
                "pseudo-data needs at least one column".into(),
            ));
        }
        let n = cols[0].len();
        if n < MIN_OBS {
            return Err(Error::InvalidArgument(format!(
                "pseudo-data needs at least {MIN_OBS} rows, got {n}"
            )));
        }
        for (k, col) in cols.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "column {} has {} rows, expected {}",
                    k + 1,
                    col.len(),
                    n
                )));
            }
            if col.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
                return Err(Error::InvalidArgument(format!(
                    "column {} contains values outside the open unit interval",
                    k + 1
                )));
            }
        }
        let names = (1..=cols.len()).map(|k| format!("u{k}")).collect();
        Ok(Self { cols, names })
    }

    /// Replaces the default column names.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols.len() {
            return Err(Error::InvalidArgument(format!(
                "got {} names for {} columns",
                names.len(),
                self.cols.len()
            )));
        }
        self.names = names;
        Ok(self)
    }

    /// Number of variables (columns).
    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    /// Number of observations (rows).
    pub fn len(&self) -> usize {
        self.cols[0].len()
    }

    /// True when there are no observations. Construction enforces a
    /// minimum row count, so this is always false; provided for idiom.
    pub fn is_empty(&self) -> bool {
        self.cols[0].is_empty()
    }

    /// Column `k` (0-based).
    pub fn col(&self, k: usize) -> &[f64] {
        &self.cols[k]
    }

    /// Column names, aligned with column indices.
    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Converts raw data columns to pseudo-observations by average ranks.
///
/// Each value is replaced by `r / (n + 1)` where `r` is its 1-based rank
/// within its column; tied values all receive the mean of the ranks they
/// occupy. The result is invariant under strictly increasing transforms of
/// a column. Columns with no variation carry no rank information and are
/// rejected.
pub fn pseudo_obs(cols: &[Vec<f64>]) -> Result<PseudoData> {
    if cols.is_empty() {
        return Err(Error::InvalidArgument(
            "pseudo_obs needs at least one column".into(),
        ));
    }
    let n = cols[0].len();
    if n < MIN_OBS {
        return Err(Error::InvalidArgument(format!(
            "pseudo_obs needs at least {MIN_OBS} rows, got {n}"
        )));
    }
    let mut out = Vec::with_capacity(cols.len());
    for (k, col) in cols.iter().enumerate() {
        if col.len() != n {
            return Err(Error::InvalidArgument(format!(
                "column {} has {} rows, expected {}",
                k + 1,
                col.len(),
                n
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "column {} contains non-finite values",
                k + 1
            )));
        }
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::InvalidArgument(format!(
                "column {} is constant; ranks are undefined",
                k + 1
            )));
        }
        out.push(average_ranks_over_np1(col));
    }
    PseudoData::new(out)
}

/// Average 1-based ranks divided by `n + 1`.
fn average_ranks_over_np1(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && col[idx[end + 1]] == col[idx[start]] {
            end += 1;
        }
        // Mean of the 1-based ranks start+1 ..= end+1.
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &i in &idx[start..=end] {
            ranks[i] = avg / (n as f64 + 1.0);
        }
        start = end + 1;
    }
    ranks
}

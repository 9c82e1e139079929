//! Point- and quantile-forecast accuracy metrics.

use crate::error::{Error, Result};

/// Root mean squared error between predictions and realized values.
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pair("rmse", pred, actual)?;
    let n = pred.len() as f64;
    let sse: f64 = pred.iter().zip(actual).map(|(&p, &y)| (y - p) * (y - p)).sum();
    Ok((sse / n).sqrt())
}

/// Mean pinball (quantile) loss of level-α quantile predictions:
/// mean over observations of α(y−q)⁺ + (1−α)(q−y)⁺.
pub fn pinball(pred_q: &[f64], actual: &[f64], alpha: f64) -> Result<f64> {
    check_pair("pinball", pred_q, actual)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pinball: alpha must lie in (0,1), got {alpha}"
        )));
    }
    let n = pred_q.len() as f64;
    let total: f64 = pred_q
        .iter()
        .zip(actual)
        .map(|(&q, &y)| alpha * (y - q).max(0.0) + (1.0 - alpha) * (q - y).max(0.0))
        .sum();
    Ok(total / n)
}

fn check_pair(what: &str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::InvalidArgument(format!("{what}: empty input")));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "{what}: length mismatch ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what}: non-finite input")));
    }
    Ok(())
}

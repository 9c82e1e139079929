//! Sample-batch serialization: one CSV row per kept draw plus a JSON
//! sidecar carrying the run configuration and per-chain adaptation
//! statistics.

use crate::error::{Error, Result};
use crate::hmc::SampleBatch;

use super::fmt_g;

/// CSV text for a batch: header `chain,iteration,u<v1>,...`, one row per
/// kept draw, floats with 12 significant digits, LF line endings. The
/// iteration column is the 1-based post-warmup iteration the draw was
/// kept at (multiples of the thinning stride).
pub fn write_samples_csv(batch: &SampleBatch) -> String {
    let mut s = String::new();
    s.push_str("chain,iteration");
    for v in &batch.c1_idx {
        s.push_str(&format!(",u{v}"));
    }
    s.push('\n');
    let thin = batch.config.thin;
    for (c, chain) in batch.chains.iter().enumerate() {
        for (k, row) in chain.draws.iter().enumerate() {
            s.push_str(&format!("{c},{}", (k + 1) * thin));
            for x in row {
                s.push(',');
                s.push_str(&fmt_g(*x, 12));
            }
            s.push('\n');
        }
    }
    s
}

/// A samples CSV read back: the coordinate column labels plus the flat
/// `(chain, iteration, coordinates)` records in file order.
#[derive(Debug, Clone)]
pub struct ParsedSamples {
    /// Coordinate column labels as written (e.g. `u2`).
    pub labels: Vec<String>,
    /// Variable indices recovered from `u<k>` labels, when all labels
    /// have that shape.
    pub variables: Option<Vec<usize>>,
    pub rows: Vec<(usize, usize, Vec<f64>)>,
}

impl ParsedSamples {
    /// Number of coordinates per draw.
    pub fn width(&self) -> usize {
        self.labels.len()
    }

    /// Draws regrouped by chain, preserving file order within each chain.
    pub fn chains(&self) -> Vec<Vec<Vec<f64>>> {
        let mut ids: Vec<usize> = self.rows.iter().map(|r| r.0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.iter()
            .map(|&id| {
                self.rows
                    .iter()
                    .filter(|r| r.0 == id)
                    .map(|r| r.2.clone())
                    .collect()
            })
            .collect()
    }

    /// All draws pooled in file order.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.2.clone()).collect()
    }
}

/// Parses CSV text in the layout written by [`write_samples_csv`].
pub fn parse_samples_csv(text: &str) -> Result<ParsedSamples> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("samples CSV", "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "chain" || cols[1] != "iteration" {
        return Err(Error::parse(
            "samples CSV",
            format!("header must start with 'chain,iteration', got '{header}'"),
        ));
    }
    let labels: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let variables = labels
        .iter()
        .map(|l| l.strip_prefix('u').and_then(|t| t.parse::<usize>().ok()))
        .collect::<Option<Vec<usize>>>();

    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(
                "samples CSV",
                format!(
                    "row {}: {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    cols.len()
                ),
            ));
        }
        let bad = |what: &str| {
            Error::parse("samples CSV", format!("row {}: invalid {what}", lineno + 2))
        };
        let chain: usize = fields[0].parse().map_err(|_| bad("chain index"))?;
        let iter: usize = fields[1].parse().map_err(|_| bad("iteration"))?;
        let coords: Vec<f64> = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v > 0.0 && *v < 1.0)
                    .ok_or_else(|| bad("coordinate (must be in the open unit interval)"))
            })
            .collect::<Result<_>>()?;
        rows.push((chain, iter, coords));
    }
    if rows.is_empty() {
        return Err(Error::parse("samples CSV", "no draws after the header"));
    }
    Ok(ParsedSamples { labels, variables, rows })
}

/// JSON sidecar for a batch: configuration, seed, pooled draw count, and
/// per-chain step sizes, metrics, acceptance statistics, and divergence
/// counts. Keys are emitted sorted, so the text is deterministic.
pub fn write_sample_sidecar(batch: &SampleBatch) -> String {
    let cfg = &batch.config;
    let chains: Vec<serde_json::Value> = batch
        .chains
        .iter()
        .enumerate()
        .map(|(i, c)| {
            serde_json::json!({
                "chain": i,
                "stream": c.stream,
                "step_size": c.step_size,
                "metric": c.metric,
                "accept_mean": c.accept_mean,
                "warmup_accept_mean": c.warmup_accept_mean,
                "divergences": c.divergences,
                "iterations": c.iterations,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "config": {
            "iterations": cfg.iterations,
            "warmup": cfg.warmup,
            "n_chains": cfg.n_chains,
            "thin": cfg.thin,
            "target_accept": cfg.target_accept,
            "max_tree_depth": cfg.max_tree_depth,
            "seed": cfg.seed,
        },
        "c1_idx": batch.c1_idx,
        "c2_idx": batch.c2_idx,
        "c2_values": batch.c2_vals,
        "r_total": batch.config.n_chains * batch.kept_per_chain(),
        "divergence_rate": batch.divergence_rate(),
        "divergence_flag": batch.divergence_flag(),
        "chains": chains,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("static JSON structure");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmc::{nuts_sample, ConditionalTarget, NutsConfig};
    use crate::paircop::{Family, PairCopula};
    use crate::vine::{VineEdge, VineSpec};

    fn small_batch() -> SampleBatch {
        let pair = PairCopula::new(Family::Gaussian, 0, vec![0.5]).unwrap();
        let spec = VineSpec::new(2, vec![vec![VineEdge::new(1, 2, vec![], pair)]]).unwrap();
        let plan = spec.compile().unwrap();
        let target = ConditionalTarget::new(&plan, &[1], &[0.4]).unwrap();
        let mut config = NutsConfig::new(100, 99);
        config.warmup = 150;
        config.n_chains = 2;
        nuts_sample(&target, &config).unwrap()
    }

    #[test]
    fn csv_round_trips_draws_exactly_enough() {
        let batch = small_batch();
        let text = write_samples_csv(&batch);
        assert!(text.starts_with("chain,iteration,u1\n"));
        assert!(!text.contains('\r'));
        let parsed = parse_samples_csv(&text).unwrap();
        assert_eq!(parsed.labels, vec!["u1"]);
        assert_eq!(parsed.variables, Some(vec![1]));
        assert_eq!(parsed.rows.len(), 2 * batch.kept_per_chain());
        // 12 significant digits: read-back within 1e-11 relative.
        let pooled = batch.pooled();
        for (row, orig) in parsed.pooled().iter().zip(&pooled) {
            assert!((row[0] - orig[0]).abs() <= 1e-11 * orig[0].abs().max(1.0));
        }
        // Iteration column: multiples of thin, per chain.
        assert_eq!(parsed.rows[0].1, batch.config.thin);
        let per_chain = parsed.chains();
        assert_eq!(per_chain.len(), 2);
        assert_eq!(per_chain[0].len(), batch.kept_per_chain());
    }

    #[test]
    fn sidecar_reports_config_and_chain_statistics() {
        let batch = small_batch();
        let text = write_sample_sidecar(&batch);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["config"]["seed"], 99);
        assert_eq!(v["config"]["thin"], 10);
        assert_eq!(v["r_total"], 20);
        assert_eq!(v["chains"].as_array().unwrap().len(), 2);
        assert!(v["chains"][0]["step_size"].as_f64().unwrap() > 0.0);
        assert_eq!(v["chains"][1]["stream"], 1);
        // Deterministic bytes.
        assert_eq!(text, write_sample_sidecar(&batch));
    }

    #[test]
    fn csv_parser_rejects_malformed_input() {
        assert!(parse_samples_csv("").is_err());
        assert!(parse_samples_csv("x,y,z\n1,2,0.5\n").is_err());
        assert!(parse_samples_csv("chain,iteration,u1\n").is_err());
        assert!(parse_samples_csv("chain,iteration,u1\n0,10\n").is_err());
        assert!(parse_samples_csv("chain,iteration,u1\n0,10,1.5\n").is_err());
        assert!(parse_samples_csv("chain,iteration,u1\n0,10,abc\n").is_err());
        let ok = parse_samples_csv("chain,iteration,v1\n0,10,0.5\n").unwrap();
        assert_eq!(ok.variables, None);
    }
}

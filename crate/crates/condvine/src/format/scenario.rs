//! Scenario descriptions for conditional stress analyses: which variables
//! are responses, which are pinned, the pinned u-scale values per named
//! scenario, optional per-variable quantile tables for converting report
//! quantiles to the original scale, derived per-draw variable
//! combinations, and joint threshold queries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Direction of a threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Event `u <= alpha`.
    Le,
    /// Event `u >= alpha`.
    Ge,
}

/// One joint-event component: compare a response's u-value against a
/// quantile level.
#[derive(Debug, Clone, Deserialize)]
pub struct ThresholdQuery {
    /// Response variable, 1-based.
    pub variable: usize,
    pub direction: Direction,
    /// Quantile level defining the threshold, in (0,1).
    pub alpha: f64,
}

/// A per-draw linear combination of responses, e.g. a difference of two
/// timing variables.
#[derive(Debug, Clone, Deserialize)]
pub struct VariableCombination {
    pub name: String,
    /// `(variable, coefficient)` terms; variables are 1-based responses.
    pub terms: Vec<(usize, f64)>,
}

/// One named conditioning scenario: u-scale values for the pinned
/// variables, aligned with the spec's `c2` order.
#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub values: Vec<f64>,
}

fn default_levels() -> Vec<f64> {
    vec![0.10, 0.50, 0.90]
}

/// A scenario file: the response/pinned split, the scenarios to run, and
/// the report configuration.
#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioSpec {
    /// Response variables (sampled), 1-based.
    pub c1: Vec<usize>,
    /// Pinned variables, 1-based; together with `c1` must cover every
    /// variable of the model exactly once.
    pub c2: Vec<usize>,
    /// Quantile levels reported per response.
    #[serde(default = "default_levels")]
    pub quantile_levels: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    /// Per-variable quantile-table CSV paths (keyed by variable label as
    /// a string), for x-scale conversion of reported quantiles.
    #[serde(default)]
    pub quantile_tables: BTreeMap<String, String>,
    /// Derived per-draw combinations reported alongside the responses.
    #[serde(default)]
    pub derived: Vec<VariableCombination>,
    /// Components of one joint threshold event evaluated per scenario.
    #[serde(default)]
    pub thresholds: Vec<ThresholdQuery>,
}

impl ScenarioSpec {
    /// Parses a scenario document from JSON text.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("scenario JSON", e.to_string()))
    }

    /// Reads and parses a scenario file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Validates the document against a model dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let err = |detail: String| Error::parse("scenario JSON", detail);
        if self.c1.is_empty() {
            return Err(err("response set c1 is empty".into()));
        }
        if self.c2.is_empty() {
            return Err(err("pinned set c2 is empty".into()));
        }
        let mut seen = vec![false; dim];
        for &v in self.c1.iter().chain(&self.c2) {
            if v == 0 || v > dim {
                return Err(err(format!("variable {v} out of range 1..={dim}")));
            }
            if seen[v - 1] {
                return Err(err(format!("variable {v} listed twice across c1/c2")));
            }
            seen[v - 1] = true;
        }
        if !seen.iter().all(|s| *s) {
            return Err(err(format!(
                "c1 and c2 must jointly cover all {dim} variables"
            )));
        }
        if self.quantile_levels.is_empty() {
            return Err(err("quantile_levels is empty".into()));
        }
        for w in self.quantile_levels.windows(2) {
            if w[0] >= w[1] {
                return Err(err("quantile_levels must be strictly increasing".into()));
            }
        }
        if self
            .quantile_levels
            .iter()
            .any(|p| !(p.is_finite() && *p > 0.0 && *p < 1.0))
        {
            return Err(err("quantile_levels must lie in (0,1)".into()));
        }
        if self.scenarios.is_empty() {
            return Err(err("no scenarios given".into()));
        }
        let mut names: Vec<&str> = self.scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(err("scenario names must be unique".into()));
        }
        for s in &self.scenarios {
            if s.values.len() != self.c2.len() {
                return Err(err(format!(
                    "scenario '{}' pins {} values for {} c2 variables",
                    s.name,
                    s.values.len(),
                    self.c2.len()
                )));
            }
            if s.values.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v < 1.0)) {
                return Err(err(format!(
                    "scenario '{}' has values outside the open unit interval",
                    s.name
                )));
            }
        }
        for d in &self.derived {
            if d.terms.is_empty() {
                return Err(err(format!("derived variable '{}' has no terms", d.name)));
            }
            for &(v, c) in &d.terms {
                if !self.c1.contains(&v) {
                    return Err(err(format!(
                        "derived variable '{}' uses non-response variable {v}",
                        d.name
                    )));
                }
                if !c.is_finite() {
                    return Err(err(format!(
                        "derived variable '{}' has a non-finite coefficient",
                        d.name
                    )));
                }
            }
        }
        for t in &self.thresholds {
            if !self.c1.contains(&t.variable) {
                return Err(err(format!(
                    "threshold on non-response variable {}",
                    t.variable
                )));
            }
            if !(t.alpha.is_finite() && t.alpha > 0.0 && t.alpha < 1.0) {
                return Err(err(format!(
                    "threshold level {} outside (0,1)",
                    t.alpha
                )));
            }
        }
        for key in self.quantile_tables.keys() {
            let ok = key
                .parse::<usize>()
                .map(|v| v >= 1 && v <= dim)
                .unwrap_or(false);
            if !ok {
                return Err(err(format!(
                    "quantile_tables key '{key}' is not a variable in 1..={dim}"
                )));
            }
        }
        Ok(())
    }
}

/// A monotone quantile table: sorted `(p, x)` anchors with linear
/// interpolation between them, used to translate u-scale quantities to
/// the variable's original scale.
#[derive(Debug, Clone)]
pub struct QuantileTable {
    ps: Vec<f64>,
    xs: Vec<f64>,
}

impl QuantileTable {
    /// Builds a table from anchors; both coordinates must be finite and
    /// strictly increasing, probabilities within [0,1].
    pub fn new(ps: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        let err = |detail: &str| Error::parse("quantile table", detail.to_string());
        if ps.len() != xs.len() {
            return Err(err("p and x columns differ in length"));
        }
        if ps.len() < 2 {
            return Err(err("need at least two (p, x) anchors"));
        }
        if ps.iter().any(|p| !(p.is_finite() && *p >= 0.0 && *p <= 1.0)) {
            return Err(err("probabilities must lie in [0,1]"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(err("x values must be finite"));
        }
        if ps.windows(2).any(|w| w[0] >= w[1]) || xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("both columns must be strictly increasing"));
        }
        Ok(Self { ps, xs })
    }

    /// Parses CSV text with a `p,x` header row.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut ps = Vec::new();
        let mut xs = Vec::new();
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("quantile table", "empty file".to_string()))?;
        let head: Vec<&str> = header.split(',').map(str::trim).collect();
        if head.len() != 2 || head[0] != "p" || head[1] != "x" {
            return Err(Error::parse(
                "quantile table",
                format!("header must be 'p,x', got '{header}'"),
            ));
        }
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    "quantile table",
                    format!("row {}: expected 2 fields", lineno + 2),
                ));
            }
            let parse = |f: &str| -> Result<f64> {
                f.parse().map_err(|_| {
                    Error::parse(
                        "quantile table",
                        format!("row {}: '{f}' is not a number", lineno + 2),
                    )
                })
            };
            ps.push(parse(fields[0])?);
            xs.push(parse(fields[1])?);
        }
        Self::new(ps, xs)
    }

    /// Reads a table from a CSV file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    /// The x-value at probability `u` by linear interpolation; outside the
    /// anchored range the end values are held constant.
    pub fn x_of_u(&self, u: f64) -> f64 {
        if u <= self.ps[0] {
            return self.xs[0];
        }
        if u >= *self.ps.last().unwrap() {
            return *self.xs.last().unwrap();
        }
        let hi = self.ps.partition_point(|p| *p < u);
        let lo = hi - 1;
        let t = (u - self.ps[lo]) / (self.ps[hi] - self.ps[lo]);
        self.xs[lo] + t * (self.xs[hi] - self.xs[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_spec() -> ScenarioSpec {
        ScenarioSpec::parse(
            r#"{
                "c1": [1, 6, 7],
                "c2": [2, 3, 4, 5],
                "scenarios": [
                    {"name": "low", "values": [0.01, 0.01, 0.01, 0.01]},
                    {"name": "mid", "values": [0.5, 0.5, 0.5, 0.5]}
                ],
                "derived": [{"name": "gap", "terms": [[6, 1.0], [7, -1.0]]}],
                "thresholds": [
                    {"variable": 1, "direction": "le", "alpha": 0.1},
                    {"variable": 6, "direction": "ge", "alpha": 0.9}
                ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn scenario_documents_parse_and_validate() {
        let spec = demo_spec();
        assert_eq!(spec.quantile_levels, vec![0.10, 0.50, 0.90]);
        assert_eq!(spec.scenarios.len(), 2);
        assert_eq!(spec.derived[0].terms, vec![(6, 1.0), (7, -1.0)]);
        assert!(matches!(spec.thresholds[0].direction, Direction::Le));
        spec.validate(7).unwrap();
    }

    #[test]
    fn scenario_validation_rejects_bad_documents() {
        let spec = demo_spec();
        // Wrong dimension: c1/c2 don't cover 1..=8.
        assert!(spec.validate(8).is_err());

        let mut overlap = spec.clone();
        overlap.c2[0] = 1;
        assert!(overlap.validate(7).is_err());

        let mut bad_value = spec.clone();
        bad_value.scenarios[0].values[2] = 1.0;
        assert!(bad_value.validate(7).is_err());

        let mut short = spec.clone();
        short.scenarios[1].values.pop();
        assert!(short.validate(7).is_err());

        let mut dup = spec.clone();
        dup.scenarios[1].name = "low".into();
        assert!(dup.validate(7).is_err());

        let mut bad_derived = spec.clone();
        bad_derived.derived[0].terms.push((2, 1.0));
        assert!(bad_derived.validate(7).is_err());

        let mut bad_threshold = spec.clone();
        bad_threshold.thresholds[0].alpha = 0.0;
        assert!(bad_threshold.validate(7).is_err());

        let mut bad_levels = spec.clone();
        bad_levels.quantile_levels = vec![0.5, 0.5];
        assert!(bad_levels.validate(7).is_err());

        let mut bad_table_key = spec.clone();
        bad_table_key
            .quantile_tables
            .insert("nope".into(), "t.csv".into());
        assert!(bad_table_key.validate(7).is_err());

        assert!(ScenarioSpec::parse("{}").is_err());
    }

    #[test]
    fn quantile_tables_interpolate_linearly() {
        let t = QuantileTable::parse_csv("p,x\n0.0,10\n0.5,20\n1.0,40\n").unwrap();
        assert_eq!(t.x_of_u(0.0), 10.0);
        assert_eq!(t.x_of_u(0.25), 15.0);
        assert_eq!(t.x_of_u(0.5), 20.0);
        assert_eq!(t.x_of_u(0.75), 30.0);
        assert_eq!(t.x_of_u(1.0), 40.0);
        // Held constant outside the anchors.
        assert_eq!(t.x_of_u(-0.1), 10.0);
        assert_eq!(t.x_of_u(1.1), 40.0);
    }

    #[test]
    fn quantile_table_validation() {
        assert!(QuantileTable::parse_csv("").is_err());
        assert!(QuantileTable::parse_csv("a,b\n0,1\n1,2\n").is_err());
        assert!(QuantileTable::parse_csv("p,x\n0,1\n").is_err());
        assert!(QuantileTable::parse_csv("p,x\n0,1\n0,2\n").is_err());
        assert!(QuantileTable::parse_csv("p,x\n0,2\n1,1\n").is_err());
        assert!(QuantileTable::parse_csv("p,x\n0,1\n2,3\n").is_err());
        assert!(QuantileTable::parse_csv("p,x\n0,one\n1,2\n").is_err());
        assert!(QuantileTable::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
    }
}

//! Vine model files: a JSON document holding the dimension, variable
//! names, and per-tree edge list. Written files are canonical — fixed key
//! order, two-space indentation, floats with 17 significant digits — so a
//! parse/serialize cycle reproduces the exact bytes.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::paircop::{Family, PairCopula};
use crate::select::FitReport;
use crate::vine::{VineEdge, VineSpec};

use super::{escape_json, fmt_g};

/// A vine model together with its variable names: the on-disk document.
#[derive(Debug, Clone)]
pub struct VineSpecFile {
    pub spec: VineSpec,
    /// One name per variable, aligned with 1-based variable labels.
    pub names: Vec<String>,
}

impl VineSpecFile {
    /// Wraps a spec with default names `u1..ud`.
    pub fn new(spec: VineSpec) -> Self {
        let names = (1..=spec.dim()).map(|k| format!("u{k}")).collect();
        Self { spec, names }
    }

    /// Wraps a spec with explicit names (one per variable).
    pub fn with_names(spec: VineSpec, names: Vec<String>) -> Result<Self> {
        if names.len() != spec.dim() {
            return Err(Error::InvalidArgument(format!(
                "got {} names for {} variables",
                names.len(),
                spec.dim()
            )));
        }
        Ok(Self { spec, names })
    }

    /// Reads and validates a model file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_vine_spec(&text)
    }

    /// Writes the canonical document.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, write_vine_spec(self)).map_err(|e| Error::io(path, e))
    }
}

/// Serializes a model to the canonical JSON text.
pub fn write_vine_spec(file: &VineSpecFile) -> String {
    let mut s = String::new();
    s.push_str("{\n");
    s.push_str(&format!("  \"dimension\": {},\n", file.spec.dim()));
    let names: Vec<String> = file
        .names
        .iter()
        .map(|n| format!("\"{}\"", escape_json(n)))
        .collect();
    s.push_str(&format!("  \"names\": [{}],\n", names.join(", ")));
    s.push_str("  \"trees\": [\n");
    let trees = file.spec.trees();
    for (t, tree) in trees.iter().enumerate() {
        s.push_str("    [\n");
        for (e, edge) in tree.iter().enumerate() {
            s.push_str("      {\n");
            s.push_str(&format!(
                "        \"conditioned\": [{}, {}],\n",
                edge.conditioned.0, edge.conditioned.1
            ));
            let cond: Vec<String> = edge.conditioning.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("        \"conditioning\": [{}],\n", cond.join(", ")));
            s.push_str(&format!(
                "        \"family\": \"{}\",\n",
                edge.copula.family().as_str()
            ));
            s.push_str(&format!("        \"rotation\": {},\n", edge.copula.rotation()));
            let params: Vec<String> =
                edge.copula.params().iter().map(|p| fmt_g(*p, 17)).collect();
            s.push_str(&format!("        \"parameters\": [{}]\n", params.join(", ")));
            s.push_str(if e + 1 < tree.len() { "      },\n" } else { "      }\n" });
        }
        s.push_str(if t + 1 < trees.len() { "    ],\n" } else { "    ]\n" });
    }
    s.push_str("  ]\n}\n");
    s
}

/// Parses and validates a model document.
pub fn parse_vine_spec(text: &str) -> Result<VineSpecFile> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse("vine model JSON", e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::parse("vine model JSON", "top level must be an object"))?;

    let d = obj
        .get("dimension")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::parse("vine model JSON", "missing integer field 'dimension'"))?
        as usize;

    let names: Vec<String> = match obj.get("names") {
        None => (1..=d).map(|k| format!("u{k}")).collect(),
        Some(v) => {
            let arr = v.as_array().ok_or_else(|| {
                Error::parse("vine model JSON", "'names' must be an array of strings")
            })?;
            arr.iter()
                .map(|n| {
                    n.as_str().map(str::to_owned).ok_or_else(|| {
                        Error::parse("vine model JSON", "'names' must be an array of strings")
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    if names.len() != d {
        return Err(Error::parse(
            "vine model JSON",
            format!("{} names for dimension {d}", names.len()),
        ));
    }

    let trees_val = obj
        .get("trees")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("vine model JSON", "missing array field 'trees'"))?;

    let mut trees = Vec::with_capacity(trees_val.len());
    for (t, tree_val) in trees_val.iter().enumerate() {
        let edges_val = tree_val.as_array().ok_or_else(|| {
            Error::parse("vine model JSON", format!("tree {} must be an array", t + 1))
        })?;
        let mut tree = Vec::with_capacity(edges_val.len());
        for (e, edge_val) in edges_val.iter().enumerate() {
            tree.push(parse_edge(edge_val, t + 1, e + 1)?);
        }
        trees.push(tree);
    }

    let spec = VineSpec::new(d, trees)?;
    VineSpecFile::with_names(spec, names)
}

fn parse_edge(v: &Value, tree: usize, idx: usize) -> Result<VineEdge> {
    let at = |detail: String| Error::parse("vine model JSON", format!("tree {tree} edge {idx}: {detail}"));
    let obj = v
        .as_object()
        .ok_or_else(|| at("edge must be an object".into()))?;

    let pair = obj
        .get("conditioned")
        .and_then(Value::as_array)
        .ok_or_else(|| at("missing array field 'conditioned'".into()))?;
    if pair.len() != 2 {
        return Err(at(format!("'conditioned' must hold 2 variables, got {}", pair.len())));
    }
    let var = |x: &Value, what: &str| -> Result<usize> {
        x.as_u64()
            .filter(|&n| n >= 1)
            .map(|n| n as usize)
            .ok_or_else(|| at(format!("{what} must be a positive integer, got {x}")))
    };
    let a = var(&pair[0], "conditioned variable")?;
    let b = var(&pair[1], "conditioned variable")?;

    let conditioning: Vec<usize> = match obj.get("conditioning") {
        None => Vec::new(),
        Some(c) => {
            let arr = c
                .as_array()
                .ok_or_else(|| at("'conditioning' must be an array".into()))?;
            arr.iter()
                .map(|x| var(x, "conditioning variable"))
                .collect::<Result<_>>()?
        }
    };

    let family_str = obj
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| at("missing string field 'family'".into()))?;
    let family = Family::ALL
        .iter()
        .copied()
        .find(|f| f.as_str() == family_str)
        .ok_or_else(|| at(format!("unknown family '{family_str}'")))?;

    let rotation = obj.get("rotation").map_or(Ok(0u64), |r| {
        r.as_u64()
            .ok_or_else(|| at(format!("rotation must be an integer, got {r}")))
    })? as u16;

    let parameters: Vec<f64> = match obj.get("parameters") {
        None => Vec::new(),
        Some(p) => {
            let arr = p
                .as_array()
                .ok_or_else(|| at("'parameters' must be an array of numbers".into()))?;
            arr.iter()
                .map(|x| {
                    x.as_f64()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| at(format!("parameter must be a finite number, got {x}")))
                })
                .collect::<Result<_>>()?
        }
    };

    let copula = PairCopula::new(family, rotation, parameters).map_err(|e| {
        at(format!("({a},{b}) with conditioning {conditioning:?}: {e}"))
    })?;
    Ok(VineEdge::new(a, b, conditioning, copula))
}

/// Serializes per-edge fit statistics and heuristic decisions to JSON.
pub fn write_fit_metadata(report: &FitReport) -> String {
    let edges: Vec<Value> = report
        .edges
        .iter()
        .map(|e| {
            serde_json::json!({
                "tree": e.tree,
                "conditioned": [e.conditioned.0, e.conditioned.1],
                "conditioning": e.conditioning,
                "family": e.family.as_str(),
                "rotation": e.rotation,
                "parameters": e.parameters,
                "tau_hat": e.tau_hat,
                "independence_p": e.independence_p,
                "loglik": e.loglik,
                "aic": e.aic,
            })
        })
        .collect();
    let decisions: Vec<Value> = report
        .pc_decisions
        .iter()
        .map(|d| {
            serde_json::json!({
                "variable": d.variable,
                "attached_to": d.attached_to,
                "via_partial": d.via_partial,
                "score": d.score,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "total_loglik": report.total_loglik,
        "total_aic": report.total_aic,
        "tree_weights": report.tree_weights,
        "edges": edges,
        "pc_decisions": decisions,
        "notes": report.notes,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("static JSON structure");
    text.push('\n');
    text
}

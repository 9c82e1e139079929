//! `fit`: select structure and pair copulas from a numeric data table.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::format::{fmt_g, write_fit_metadata, write_vine_spec, VineSpecFile};
use crate::paircop::{Family, PairCopula};
use crate::select::{dissmann_fit, pc_forward_structure, pseudo_obs, FitOptions, FitReport};

use super::{Execution, GlobalOpts};

/// Structure-selection method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Greedy maximum spanning trees on absolute Kendall's tau, level by
    /// level.
    Dissmann,
    /// Response-centered forward attachment by correlations and partial
    /// correlations; needs `--response`.
    PcForward,
}

/// Arguments of the `fit` subcommand.
#[derive(Debug, Clone)]
pub struct FitArgs {
    /// Numeric CSV with one header row; columns are variables.
    pub data: PathBuf,
    pub method: FitMethod,
    /// Candidate family names; `None` enters the full catalog.
    pub families: Option<Vec<String>>,
    /// Response column (name or 1-based index) for [`FitMethod::PcForward`].
    pub response: Option<String>,
    /// Significance level of the independence pre-test.
    pub independence_level: Option<f64>,
}

/// Converts the data to pseudo-observations, runs the selected method,
/// writes the fitted model and its per-edge metadata, and prints a tree
/// summary.
pub fn cmd_fit(args: &FitArgs, global: &GlobalOpts) -> Result<Execution> {
    if args.method == FitMethod::PcForward && args.response.is_none() {
        return Err(Error::InvalidArgument(
            "--method pcforward needs --response to name the centered variable".into(),
        ));
    }
    let (names, cols) = crate::format::read_numeric_csv(&args.data)?;
    let pdata = pseudo_obs(&cols)?.with_names(names.clone())?;

    let mut options = match &args.families {
        Some(list) => {
            let fams: Vec<Family> =
                list.iter().map(|n| parse_family(n)).collect::<Result<_>>()?;
            FitOptions::with_families(&fams)
        }
        None => FitOptions::default(),
    };
    if let Some(level) = args.independence_level {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "--independence-level {level} outside (0,1)"
            )));
        }
        options.independence_level = level;
    }

    let report: FitReport = match args.method {
        FitMethod::Dissmann => dissmann_fit(&pdata, &options)?,
        FitMethod::PcForward => {
            let response = resolve_response(args.response.as_deref().unwrap(), &names)?;
            pc_forward_structure(&pdata, response, &options)?
        }
    };

    let model = VineSpecFile::with_names(report.spec.clone(), names.clone())?;
    let model_path = global.out_dir.join("model.json");
    super::write_text(&model_path, &write_vine_spec(&model))?;
    let meta_path = global.out_dir.join("fit.json");
    super::write_text(&meta_path, &write_fit_metadata(&report))?;

    let mut out = String::new();
    out.push_str(&format!(
        "{:<5} {:<14} {:<14} {:<12} {:<4} {:<26} {:>7}\n",
        "tree", "conditioned", "conditioning", "family", "rot", "parameters", "tau"
    ));
    for edge in &report.edges {
        let copula = PairCopula::new(edge.family, edge.rotation, edge.parameters.clone())?;
        let conditioned = format!(
            "{},{}",
            label(&names, edge.conditioned.0),
            label(&names, edge.conditioned.1)
        );
        let conditioning = if edge.conditioning.is_empty() {
            "-".to_string()
        } else {
            edge.conditioning.iter().map(|&v| label(&names, v)).collect::<Vec<_>>().join(",")
        };
        let params = if edge.parameters.is_empty() {
            "-".to_string()
        } else {
            edge.parameters.iter().map(|&p| fmt_g(p, 6)).collect::<Vec<_>>().join(", ")
        };
        out.push_str(&format!(
            "{:<5} {:<14} {:<14} {:<12} {:<4} {:<26} {:>+7.3}\n",
            edge.tree,
            conditioned,
            conditioning,
            edge.family.as_str(),
            edge.rotation,
            params,
            copula.tau()
        ));
    }
    out.push_str(&format!(
        "log-likelihood {:.3}, AIC {:.3}\n",
        report.total_loglik, report.total_aic
    ));
    for d in &report.pc_decisions {
        out.push_str(&format!(
            "attach {} to {} ({}, score {:.3})\n",
            label(&names, d.variable),
            label(&names, d.attached_to),
            if d.via_partial { "partial correlation" } else { "direct" },
            d.score
        ));
    }
    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out.push_str(&format!("wrote model to {}\n", model_path.display()));
    out.push_str(&format!("wrote fit metadata to {}\n", meta_path.display()));
    Ok(Execution::ok(out))
}

fn label(names: &[String], v: usize) -> String {
    names.get(v - 1).cloned().unwrap_or_else(|| format!("u{v}"))
}

fn parse_family(name: &str) -> Result<Family> {
    let wanted = name.trim().to_ascii_lowercase();
    Family::ALL.iter().copied().find(|f| f.as_str() == wanted).ok_or_else(|| {
        let valid: Vec<&str> = Family::ALL.iter().map(|f| f.as_str()).collect();
        Error::InvalidArgument(format!(
            "unknown copula family '{name}'; valid names: {}",
            valid.join(", ")
        ))
    })
}

/// Resolves a response given as a column name or a 1-based index.
fn resolve_response(raw: &str, names: &[String]) -> Result<usize> {
    if let Some(pos) = names.iter().position(|n| n == raw) {
        return Ok(pos + 1);
    }
    if let Ok(idx) = raw.parse::<usize>() {
        if (1..=names.len()).contains(&idx) {
            return Ok(idx);
        }
    }
    Err(Error::InvalidArgument(format!(
        "--response '{raw}' is neither a column name ({}) nor an index in 1..={}",
        names.join(", "),
        names.len()
    )))
}

//! `scenario`: conditional quantile and joint-probability reports for
//! named conditioning scenarios.
//!
//! For every scenario the responses are sampled conditionally on the
//! pinned values; the report holds per-response empirical quantiles
//! (u scale, plus the original scale where a quantile table is
//! supplied), quantiles of derived per-draw linear combinations, and the
//! relative frequency of one joint threshold event whose per-variable
//! thresholds are the responses' own empirical conditional quantiles.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::format::{fmt_g, QuantileTable, ScenarioSpec};
use crate::hmc::{nuts_sample, ConditionalTarget};

use super::{
    csv_field, derive_seed, load_model, quantile_of_sorted, sorted_values, var_label, Execution,
    GlobalOpts, NutsFlags,
};

const TAG_SCENARIO: u64 = 0x5C;

/// Default post-warmup iterations per chain (1000 pooled draws at the
/// library defaults).
const DEFAULT_ITERATIONS: usize = 2500;

/// Arguments of the `scenario` subcommand.
#[derive(Debug, Clone)]
pub struct ScenarioArgs {
    pub model: PathBuf,
    /// Scenario JSON document.
    pub scenario: PathBuf,
    pub nuts: NutsFlags,
}

/// Which scale a derived combination is reported on.
enum DerivedScale {
    U,
    X,
}

/// Runs every scenario and writes `scenario_quantiles.csv` plus, when
/// threshold queries are present, `scenario_probabilities.csv`.
pub fn cmd_scenario(args: &ScenarioArgs, global: &GlobalOpts) -> Result<Execution> {
    let (file, plan) = load_model(&args.model)?;
    let sspec = ScenarioSpec::read(&args.scenario)?;
    sspec.validate(plan.dim())?;

    let c1 = sspec.c1.clone();
    let c2 = sspec.c2.clone();

    // Quantile tables, keyed by variable index; paths resolve relative
    // to the scenario file.
    let base: &Path = args.scenario.parent().unwrap_or_else(|| Path::new("."));
    let mut tables: BTreeMap<usize, QuantileTable> = BTreeMap::new();
    for (key, rel) in &sspec.quantile_tables {
        let var: usize = key.parse().expect("validated variable key");
        let raw = PathBuf::from(rel);
        let path = if raw.is_relative() { base.join(&raw) } else { raw };
        tables.insert(var, QuantileTable::read(&path)?);
    }

    // Derived combinations must not straddle the two scales.
    let mut derived_scales: Vec<DerivedScale> = Vec::new();
    for combo in &sspec.derived {
        let with: usize =
            combo.terms.iter().filter(|(v, _)| tables.contains_key(v)).count();
        if with == 0 {
            derived_scales.push(DerivedScale::U);
        } else if with == combo.terms.len() {
            derived_scales.push(DerivedScale::X);
        } else {
            return Err(Error::InvalidArgument(format!(
                "derived variable '{}' mixes variables with and without quantile tables; \
                 supply tables for all of its variables or none",
                combo.name
            )));
        }
    }

    let levels = &sspec.quantile_levels;
    let mut quant_csv = String::from("scenario,variable,scale");
    for &p in levels {
        quant_csv.push_str(&format!(",q{}", fmt_g(p, 12)));
    }
    quant_csv.push('\n');
    let mut prob_csv = String::from("scenario,event,probability,se,draws\n");
    let mut out = String::new();

    for (si, scen) in sspec.scenarios.iter().enumerate() {
        // Pinned values in ascending variable order.
        let mut pinned: Vec<(usize, f64)> =
            c2.iter().copied().zip(scen.values.iter().copied()).collect();
        pinned.sort_unstable_by_key(|&(v, _)| v);
        let c2_vals: Vec<f64> = pinned.iter().map(|&(_, x)| x).collect();

        let target = ConditionalTarget::new(&plan, &c1, &c2_vals)?;
        let config = args
            .nuts
            .build(DEFAULT_ITERATIONS, derive_seed(global.seed, &[TAG_SCENARIO, si as u64]))?;
        let batch = nuts_sample(&target, &config)?;
        let pooled = batch.pooled();
        let n = pooled.len();
        out.push_str(&format!("scenario {} ({} draws):\n", scen.name, n));

        // Per-response quantiles, u scale and optionally x scale.
        let mut sorted_cols: Vec<Vec<f64>> = Vec::with_capacity(c1.len());
        for (j, &v) in c1.iter().enumerate() {
            let col: Vec<f64> = pooled.iter().map(|r| r[j]).collect();
            let sorted = sorted_values(&col);
            let uq: Vec<f64> = levels.iter().map(|&p| quantile_of_sorted(&sorted, p)).collect();
            let name = var_label(&file.names, v);
            push_quantile_row(&mut quant_csv, &scen.name, &name, "u", &uq);
            out.push_str(&format!("  {name} (u): {}\n", preview(&uq)));
            if let Some(table) = tables.get(&v) {
                let xq: Vec<f64> = uq.iter().map(|&u| table.x_of_u(u)).collect();
                push_quantile_row(&mut quant_csv, &scen.name, &name, "x", &xq);
                out.push_str(&format!("  {name} (x): {}\n", preview(&xq)));
            }
            sorted_cols.push(sorted);
        }

        // Derived combinations.
        for (combo, scale) in sspec.derived.iter().zip(&derived_scales) {
            let scale_str = match scale {
                DerivedScale::U => "u",
                DerivedScale::X => "x",
            };
            let values: Vec<f64> = pooled
                .iter()
                .map(|row| {
                    combo
                        .terms
                        .iter()
                        .map(|&(v, coef)| {
                            let pos = c1.iter().position(|&x| x == v).expect("validated response");
                            let u = row[pos];
                            match scale {
                                DerivedScale::U => coef * u,
                                DerivedScale::X => coef * tables[&v].x_of_u(u),
                            }
                        })
                        .sum()
                })
                .collect();
            let sorted = sorted_values(&values);
            let qs: Vec<f64> = levels.iter().map(|&p| quantile_of_sorted(&sorted, p)).collect();
            push_quantile_row(&mut quant_csv, &scen.name, &combo.name, scale_str, &qs);
            out.push_str(&format!("  {} ({scale_str}): {}\n", combo.name, preview(&qs)));
        }

        // Joint threshold event.
        if !sspec.thresholds.is_empty() {
            let mut descr: Vec<String> = Vec::new();
            let mut hold = vec![true; n];
            for t in &sspec.thresholds {
                let pos = c1.iter().position(|&x| x == t.variable).expect("validated response");
                let cut = quantile_of_sorted(&sorted_cols[pos], t.alpha);
                let name = var_label(&file.names, t.variable);
                let op = match t.direction {
                    crate::format::Direction::Le => "<=",
                    crate::format::Direction::Ge => ">=",
                };
                descr.push(format!("{name}{op}q{}", fmt_g(t.alpha, 12)));
                for (i, row) in pooled.iter().enumerate() {
                    let v = row[pos];
                    let ok = match t.direction {
                        crate::format::Direction::Le => v <= cut,
                        crate::format::Direction::Ge => v >= cut,
                    };
                    hold[i] = hold[i] && ok;
                }
            }
            let count = hold.iter().filter(|&&h| h).count();
            let p = count as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let event = descr.join(" & ");
            prob_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&scen.name),
                csv_field(&event),
                fmt_g(p, 12),
                fmt_g(se, 12),
                n
            ));
            out.push_str(&format!("  P({event}) = {p:.4} (se {se:.4})\n"));
        }
    }

    let quant_path = global.out_dir.join("scenario_quantiles.csv");
    super::write_text(&quant_path, &quant_csv)?;
    out.push_str(&format!("wrote quantiles to {}\n", quant_path.display()));
    if !sspec.thresholds.is_empty() {
        let prob_path = global.out_dir.join("scenario_probabilities.csv");
        super::write_text(&prob_path, &prob_csv)?;
        out.push_str(&format!("wrote probabilities to {}\n", prob_path.display()));
    }
    Ok(Execution::ok(out))
}

fn push_quantile_row(csv: &mut String, scenario: &str, variable: &str, scale: &str, qs: &[f64]) {
    csv.push_str(&csv_field(scenario));
    csv.push(',');
    csv.push_str(&csv_field(variable));
    csv.push(',');
    csv.push_str(scale);
    for &q in qs {
        csv.push(',');
        csv.push_str(&fmt_g(q, 12));
    }
    csv.push('\n');
}

fn preview(qs: &[f64]) -> String {
    let cells: Vec<String> = qs.iter().map(|&q| format!("{q:.4}")).collect();
    cells.join(" / ")
}

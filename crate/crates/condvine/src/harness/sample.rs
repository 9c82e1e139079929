//! `sample` and `sample-conditional`: draw from the model, either
//! unconditionally (exact inverse-transform sampling) or conditionally on
//! pinned coordinates (Markov chains).

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::{fmt_g, write_sample_sidecar, write_samples_csv};
use crate::gof::diagnostics;
use crate::hmc::{nuts_sample, ConditionalTarget};

use super::{
    ascending_complement, check_c1, csv_field, load_model, validate_unit_open, var_label,
    Execution, GlobalOpts, NutsFlags,
};

/// Default post-warmup iterations per chain for conditional sampling:
/// with four chains and stride-10 thinning this pools 1000 kept draws.
const DEFAULT_ITERATIONS: usize = 2500;

/// Arguments of the `sample` subcommand (unconditional draws).
#[derive(Debug, Clone)]
pub struct SampleArgs {
    pub model: PathBuf,
    /// Number of rows to draw.
    pub draws: usize,
}

/// Draws exact unconditional samples and writes them as CSV, one column
/// per variable, named after the model's variable labels.
pub fn cmd_sample(args: &SampleArgs, global: &GlobalOpts) -> Result<Execution> {
    let (file, plan) = load_model(&args.model)?;
    if args.draws == 0 {
        return Err(Error::InvalidArgument("--draws must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let rows = plan.sample(args.draws, &mut rng);

    let mut csv = String::new();
    let header: Vec<String> = file.names.iter().map(|n| csv_field(n)).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for row in &rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_g(v, 12)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }

    let path = global.out_dir.join("samples.csv");
    super::write_text(&path, &csv)?;
    Ok(Execution::ok(format!(
        "wrote {} unconditional draws ({} columns) to {}\n",
        args.draws,
        plan.dim(),
        path.display()
    )))
}

/// Arguments of the `sample-conditional` subcommand.
#[derive(Debug, Clone)]
pub struct SampleConditionalArgs {
    pub model: PathBuf,
    /// Free (sampled) variables, 1-based.
    pub c1: Vec<usize>,
    /// Values pinning the remaining variables, in ascending variable
    /// order.
    pub c2_values: Vec<f64>,
    pub nuts: NutsFlags,
}

/// Samples the conditional distribution of the `--c1` block given pinned
/// values for every other coordinate. Writes the kept draws, a sampler
/// metadata sidecar, and a convergence report; exits 3 when any
/// coordinate's split R-hat exceeds 1.05.
pub fn cmd_sample_conditional(
    args: &SampleConditionalArgs,
    global: &GlobalOpts,
) -> Result<Execution> {
    let (file, plan) = load_model(&args.model)?;
    let c1 = check_c1(plan.dim(), &args.c1)?;
    let c2 = ascending_complement(plan.dim(), &c1);
    if args.c2_values.len() != c2.len() {
        let labels: Vec<String> = c2.iter().map(|&v| var_label(&file.names, v)).collect();
        return Err(Error::InvalidArgument(format!(
            "--c2-values needs {} entries for the pinned variables ({}), got {}",
            c2.len(),
            labels.join(", "),
            args.c2_values.len()
        )));
    }
    validate_unit_open("--c2-values", &args.c2_values)?;

    let target = ConditionalTarget::new(&plan, &c1, &args.c2_values)?;
    let config = args.nuts.build(DEFAULT_ITERATIONS, global.seed)?;
    let batch = nuts_sample(&target, &config)?;
    let report = diagnostics(&batch)?;

    let samples_path = global.out_dir.join("samples.csv");
    let meta_path = global.out_dir.join("samples.meta.json");
    let diag_path = global.out_dir.join("diagnostics.json");
    super::write_text(&samples_path, &write_samples_csv(&batch))?;
    super::write_text(&meta_path, &write_sample_sidecar(&batch))?;
    let diag_json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::parse("diagnostics JSON", e.to_string()))?;
    super::write_text(&diag_path, &format!("{diag_json}\n"))?;

    let mut out = String::new();
    out.push_str(&format!(
        "pooled {} draws over {} chains ({} kept per chain)\n",
        report.pooled_draws, report.n_chains, report.kept_per_chain
    ));
    for (pos, coord) in report.coordinates.iter().enumerate() {
        out.push_str(&format!(
            "  {}: rhat={:.4} ess={:.1} ess/draw={:.3}\n",
            var_label(&file.names, c1[pos]),
            coord.rhat,
            coord.ess,
            coord.ess_per_draw
        ));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out.push_str(&format!("wrote samples to {}\n", samples_path.display()));
    out.push_str(&format!("wrote sampler metadata to {}\n", meta_path.display()));
    out.push_str(&format!("wrote diagnostics to {}\n", diag_path.display()));

    let max_rhat = report.coordinates.iter().map(|c| c.rhat).fold(f64::NEG_INFINITY, f64::max);
    let exit = if max_rhat > 1.05 {
        out.push_str(&format!(
            "mixing failure: split R-hat {max_rhat:.4} exceeds 1.05\n"
        ));
        3
    } else {
        0
    };
    Ok(Execution { stdout: out, exit })
}

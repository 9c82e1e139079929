//! `simstudy`: repeated conditional-sampling runs over a grid of
//! conditioning strengths and sample sizes, summarized as a
//! rejection-rate table.
//!
//! Conditioning rows are picked from a pool of exact unconditional
//! draws: each draw's Euclidean distance to the central vector
//! (0.5, ..., 0.5) is computed, and for every requested level α the draw
//! whose distance is closest to the empirical α-quantile of all pool
//! distances supplies the pinned values. Low α thus pins near-central
//! values, high α pins peripheral ones.
//!
//! Every (α, R) cell runs `reps` independent sampler repetitions; each
//! repetition pools R kept draws, applies the appropriate test (one
//! response: uniformity of the probability integral transform; two
//! responses: the Rosenblatt six-test battery), and records convergence
//! diagnostics. The output table mirrors the classic layout: one row per
//! (α, R) with the rejection percentage and min–max columns for ESS per
//! draw and split R-hat.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::gof::{diagnostics, ks_uniform_test, pit_univariate, rosenblatt_battery};
use crate::hmc::{nuts_sample, ConditionalTarget};
use crate::vine::EvalPlan;

use super::{
    ascending_complement, check_c1, csv_field, derive_seed, load_model, quantile_of_sorted,
    sorted_values, var_label, Execution, GlobalOpts, NutsFlags,
};

/// Seed-derivation tags: the pool draw and the per-repetition chains.
const TAG_POOL: u64 = 0x51;
const TAG_REP: u64 = 0x52;

/// Arguments of the `simstudy` subcommand.
#[derive(Debug, Clone)]
pub struct SimstudyArgs {
    pub model: PathBuf,
    /// Response variables, 1-based; one or two of them.
    pub c1: Vec<usize>,
    /// Conditioning-strength quantile levels; defaults to 0.05/0.5/0.95
    /// for one response and 0.05/0.5/0.85 for two.
    pub alphas: Option<Vec<f64>>,
    /// Pooled kept draws per repetition, one table column block per
    /// entry.
    pub r_list: Vec<usize>,
    /// Repetitions per (α, R) cell.
    pub reps: usize,
    /// Unconditional pool size used to pick conditioning rows.
    pub pool: usize,
    pub nuts: NutsFlags,
}

/// One repetition's outcome.
struct RepOutcome {
    rejected: bool,
    ess_per_draw_min: f64,
    ess_per_draw_max: f64,
    rhat_min: f64,
    rhat_max: f64,
}

/// One (α, R) cell after aggregation.
struct CellOutcome {
    label: String,
    alpha: f64,
    r_total: usize,
    reps_completed: usize,
    rejected: usize,
    ess_min: f64,
    ess_max: f64,
    rhat_min: f64,
    rhat_max: f64,
    failures: Vec<String>,
}

/// Runs the simulation study and writes `simstudy.csv` (the table) and
/// `simstudy_conditioning.csv` (the pinned rows per α).
pub fn cmd_simstudy(args: &SimstudyArgs, global: &GlobalOpts) -> Result<Execution> {
    let (file, plan) = load_model(&args.model)?;
    let c1 = check_c1(plan.dim(), &args.c1)?;
    let k = c1.len();
    if k > 2 {
        return Err(Error::InvalidArgument(format!(
            "the study tests one or two response variables, got {k}"
        )));
    }
    let c2 = ascending_complement(plan.dim(), &c1);
    let alphas = match &args.alphas {
        Some(a) => a.clone(),
        None if k == 1 => vec![0.05, 0.5, 0.95],
        None => vec![0.05, 0.5, 0.85],
    };
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("--alphas must not be empty".into()));
    }
    super::validate_unit_open("--alphas", &alphas)?;
    if args.r_list.is_empty() {
        return Err(Error::InvalidArgument("--r-list must not be empty".into()));
    }
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be positive".into()));
    }
    if args.pool < 10 {
        return Err(Error::InvalidArgument(format!(
            "conditioning pool of {} is too small; use at least 10",
            args.pool
        )));
    }

    // Pool of exact draws and their distances to the center.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(global.seed, &[TAG_POOL]));
    let pool = plan.sample(args.pool, &mut rng);
    let dists: Vec<f64> = pool
        .iter()
        .map(|row| row.iter().map(|&u| (u - 0.5) * (u - 0.5)).sum::<f64>().sqrt())
        .collect();
    let sorted_dists = sorted_values(&dists);

    let labels = level_labels(&alphas);
    let mut conditioning: Vec<(String, f64, f64, Vec<f64>)> = Vec::new();
    for (label, &alpha) in labels.iter().zip(&alphas) {
        let q = quantile_of_sorted(&sorted_dists, alpha);
        let mut best = 0usize;
        for (i, &d) in dists.iter().enumerate() {
            if (d - q).abs() < (dists[best] - q).abs() {
                best = i;
            }
        }
        let row: Vec<f64> = c2.iter().map(|&v| pool[best][v - 1]).collect();
        conditioning.push((label.clone(), alpha, dists[best], row));
    }

    // Run all cells.
    let mut cells: Vec<CellOutcome> = Vec::new();
    for (ai, (label, alpha, _, c2_vals)) in conditioning.iter().enumerate() {
        for (ri, &r) in args.r_list.iter().enumerate() {
            let outcomes: Vec<std::result::Result<RepOutcome, String>> = (0..args.reps)
                .into_par_iter()
                .map(|rep| {
                    let seed = derive_seed(
                        global.seed,
                        &[TAG_REP, ai as u64, ri as u64, rep as u64],
                    );
                    run_repetition(&plan, &c1, c2_vals, &args.nuts, r, seed)
                        .map_err(|e| format!("alpha {alpha} R {r} rep {rep}: {e}"))
                })
                .collect();

            let mut cell = CellOutcome {
                label: label.clone(),
                alpha: *alpha,
                r_total: 0,
                reps_completed: 0,
                rejected: 0,
                ess_min: f64::INFINITY,
                ess_max: f64::NEG_INFINITY,
                rhat_min: f64::INFINITY,
                rhat_max: f64::NEG_INFINITY,
                failures: Vec::new(),
            };
            // The realized pooled count is identical across repetitions;
            // recover it without rerunning the sampler.
            cell.r_total = args.nuts.build_for_total(r, 0)?.1;
            for o in outcomes {
                match o {
                    Ok(rep) => {
                        cell.reps_completed += 1;
                        cell.rejected += usize::from(rep.rejected);
                        cell.ess_min = cell.ess_min.min(rep.ess_per_draw_min);
                        cell.ess_max = cell.ess_max.max(rep.ess_per_draw_max);
                        cell.rhat_min = cell.rhat_min.min(rep.rhat_min);
                        cell.rhat_max = cell.rhat_max.max(rep.rhat_max);
                    }
                    Err(msg) => cell.failures.push(msg),
                }
            }
            if cell.reps_completed == 0 {
                cell.ess_min = f64::NAN;
                cell.ess_max = f64::NAN;
                cell.rhat_min = f64::NAN;
                cell.rhat_max = f64::NAN;
            }
            cells.push(cell);
        }
    }

    // Table CSV.
    let mut csv = String::from(
        "conditioning,alpha,r_total,reps_completed,rejected,rejected_pct,\
         ess_per_draw_min,ess_per_draw_max,rhat_min,rhat_max,failures\n",
    );
    for cell in &cells {
        let pct = if cell.reps_completed == 0 {
            f64::NAN
        } else {
            100.0 * cell.rejected as f64 / cell.reps_completed as f64
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&cell.label),
            fmt_g(cell.alpha, 12),
            cell.r_total,
            cell.reps_completed,
            cell.rejected,
            fmt_g(pct, 12),
            fmt_g(cell.ess_min, 12),
            fmt_g(cell.ess_max, 12),
            fmt_g(cell.rhat_min, 12),
            fmt_g(cell.rhat_max, 12),
            cell.failures.len()
        ));
    }
    let table_path = global.out_dir.join("simstudy.csv");
    super::write_text(&table_path, &csv)?;

    // Conditioning rows CSV.
    let mut cond_csv = String::from("conditioning,alpha,distance");
    for &v in &c2 {
        cond_csv.push(',');
        cond_csv.push_str(&csv_field(&var_label(&file.names, v)));
    }
    cond_csv.push('\n');
    for (label, alpha, dist, row) in &conditioning {
        cond_csv.push_str(&format!(
            "{},{},{}",
            csv_field(label),
            fmt_g(*alpha, 12),
            fmt_g(*dist, 12)
        ));
        for &v in row {
            cond_csv.push(',');
            cond_csv.push_str(&fmt_g(v, 12));
        }
        cond_csv.push('\n');
    }
    let cond_path = global.out_dir.join("simstudy_conditioning.csv");
    super::write_text(&cond_path, &cond_csv)?;

    // Human-readable summary.
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>6} {:>8} {:>9} {:>8} {:>17} {:>15}\n",
        "conditioning", "alpha", "R", "rejected", "percent", "ess/draw min-max", "rhat min-max"
    ));
    for cell in &cells {
        let pct = if cell.reps_completed == 0 {
            "-".to_string()
        } else {
            format!("{:.0}%", 100.0 * cell.rejected as f64 / cell.reps_completed as f64)
        };
        out.push_str(&format!(
            "{:<12} {:>6} {:>8} {:>9} {:>8} {:>8.3}-{:<8.3} {:>7.3}-{:<7.3}\n",
            cell.label,
            cell.alpha,
            cell.r_total,
            format!("{}/{}", cell.rejected, cell.reps_completed),
            pct,
            cell.ess_min,
            cell.ess_max,
            cell.rhat_min,
            cell.rhat_max,
        ));
    }
    let total_failures: usize = cells.iter().map(|c| c.failures.len()).sum();
    for cell in &cells {
        for f in &cell.failures {
            out.push_str(&format!("failure: {f}\n"));
        }
    }
    if total_failures > 0 {
        out.push_str(&format!("{total_failures} repetitions failed; their cells report the rest\n"));
    }
    out.push_str(&format!("wrote table to {}\n", table_path.display()));
    out.push_str(&format!("wrote conditioning rows to {}\n", cond_path.display()));
    Ok(Execution::ok(out))
}

/// One sampler repetition and its test verdict.
fn run_repetition(
    plan: &EvalPlan,
    c1: &[usize],
    c2_vals: &[f64],
    flags: &NutsFlags,
    r_total: usize,
    seed: u64,
) -> Result<RepOutcome> {
    let (config, _) = flags.build_for_total(r_total, seed)?;
    let target = ConditionalTarget::new(plan, c1, c2_vals)?;
    let batch = nuts_sample(&target, &config)?;
    let report = diagnostics(&batch)?;
    let pooled = batch.pooled();

    let rejected = match c1.len() {
        1 => {
            let xs: Vec<f64> = pooled.iter().map(|r| r[0]).collect();
            let pit = pit_univariate(plan, c1[0], c2_vals, &xs)?;
            let (_, p) = ks_uniform_test(&pit)?;
            p < 0.05
        }
        _ => {
            let pairs: Vec<(f64, f64)> = pooled.iter().map(|r| (r[0], r[1])).collect();
            rosenblatt_battery(plan, (c1[0], c1[1]), c2_vals, &pairs)?.reject
        }
    };

    let mut o = RepOutcome {
        rejected,
        ess_per_draw_min: f64::INFINITY,
        ess_per_draw_max: f64::NEG_INFINITY,
        rhat_min: f64::INFINITY,
        rhat_max: f64::NEG_INFINITY,
    };
    for c in &report.coordinates {
        o.ess_per_draw_min = o.ess_per_draw_min.min(c.ess_per_draw);
        o.ess_per_draw_max = o.ess_per_draw_max.max(c.ess_per_draw);
        o.rhat_min = o.rhat_min.min(c.rhat);
        o.rhat_max = o.rhat_max.max(c.rhat);
    }
    Ok(o)
}

/// Row labels: the classic low/medium/high by rank when exactly three
/// levels are run, positional names otherwise.
fn level_labels(alphas: &[f64]) -> Vec<String> {
    if alphas.len() == 3 {
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| alphas[a].total_cmp(&alphas[b]));
        let mut labels = vec![String::new(); 3];
        for (rank, &pos) in order.iter().enumerate() {
            labels[pos] = ["low", "medium", "high"][rank].to_string();
        }
        labels
    } else {
        (1..=alphas.len()).map(|i| format!("level{i}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::VineSpecFile;
    use crate::vine::testutil::dvine3;

    fn model_file(dir: &std::path::Path) -> PathBuf {
        let path = dir.join("m.json");
        VineSpecFile::new(dvine3()).write(&path).unwrap();
        path
    }

    fn quick_args(model: PathBuf) -> SimstudyArgs {
        SimstudyArgs {
            model,
            c1: vec![2],
            alphas: None,
            r_list: vec![40],
            reps: 2,
            pool: 100,
            nuts: NutsFlags {
                chains: Some(2),
                thin: Some(5),
                warmup: Some(100),
                ..NutsFlags::default()
            },
        }
    }

    #[test]
    fn univariate_study_emits_the_full_table() {
        let dir = tempfile::tempdir().unwrap();
        let global = GlobalOpts { seed: 12, out_dir: dir.path().join("out") };
        let out = cmd_simstudy(&quick_args(model_file(dir.path())), &global).unwrap();
        assert_eq!(out.exit, 0);

        let table = std::fs::read_to_string(dir.path().join("out/simstudy.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 1 + 3, "header plus one row per alpha: {table}");
        assert!(lines[0].starts_with("conditioning,alpha,r_total,reps_completed,rejected"));
        assert!(lines[1].starts_with("low,0.05,40,"));
        assert!(lines[2].starts_with("medium,0.5,40,"));
        assert!(lines[3].starts_with("high,0.95,40,"));
        for line in &lines[1..] {
            let cells: Vec<&str> = line.split(',').collect();
            let completed: usize = cells[3].parse().unwrap();
            let rejected: usize = cells[4].parse().unwrap();
            assert!(completed <= 2 && rejected <= completed);
            assert_eq!(cells[10], "0", "no failures expected: {line}");
        }

        let cond = std::fs::read_to_string(dir.path().join("out/simstudy_conditioning.csv")).unwrap();
        let lines: Vec<&str> = cond.lines().collect();
        assert_eq!(lines[0], "conditioning,alpha,distance,u1,u3");
        assert_eq!(lines.len(), 4);
        for line in &lines[1..] {
            let cells: Vec<&str> = line.split(',').collect();
            for v in &cells[3..] {
                let x: f64 = v.parse().unwrap();
                assert!(x > 0.0 && x < 1.0);
            }
        }
        // Peripheral rows sit farther from the center than central ones.
        let dist =
            |line: &str| line.split(',').nth(2).unwrap().parse::<f64>().unwrap();
        assert!(dist(lines[1]) < dist(lines[3]), "{cond}");
    }

    #[test]
    fn bivariate_cells_use_the_battery() {
        let dir = tempfile::tempdir().unwrap();
        let mut args = quick_args(model_file(dir.path()));
        args.c1 = vec![1, 3];
        args.alphas = Some(vec![0.5]);
        args.reps = 1;
        args.r_list = vec![60];
        let global = GlobalOpts { seed: 4, out_dir: dir.path().join("out") };
        let out = cmd_simstudy(&args, &global).unwrap();
        assert_eq!(out.exit, 0, "{}", out.stdout);
        let table = std::fs::read_to_string(dir.path().join("out/simstudy.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("level1,0.5,60,1,"), "{table}");
    }

    #[test]
    fn studies_are_deterministic_under_the_seed() {
        let dir = tempfile::tempdir().unwrap();
        let model = model_file(dir.path());
        for sub in ["a", "b"] {
            let mut args = quick_args(model.clone());
            args.alphas = Some(vec![0.3, 0.7]);
            let global = GlobalOpts { seed: 9, out_dir: dir.path().join(sub) };
            cmd_simstudy(&args, &global).unwrap();
        }
        for file in ["simstudy.csv", "simstudy_conditioning.csv"] {
            let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
            assert_eq!(a, b, "{file} differs");
        }
    }

    #[test]
    fn invalid_setups_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let model = model_file(dir.path());
        let global = GlobalOpts { seed: 0, out_dir: dir.path().to_path_buf() };

        let mut too_many = quick_args(model.clone());
        too_many.c1 = vec![1, 2, 3];
        let err = cmd_simstudy(&too_many, &global).unwrap_err();
        assert_eq!(super::super::exit_code(&err), 2);

        let mut bad_alpha = quick_args(model.clone());
        bad_alpha.alphas = Some(vec![0.5, 1.5]);
        assert_eq!(
            super::super::exit_code(&cmd_simstudy(&bad_alpha, &global).unwrap_err()),
            2
        );

        let mut no_r = quick_args(model.clone());
        no_r.r_list = vec![];
        assert_eq!(super::super::exit_code(&cmd_simstudy(&no_r, &global).unwrap_err()), 2);

        let mut tiny_pool = quick_args(model);
        tiny_pool.pool = 5;
        assert_eq!(
            super::super::exit_code(&cmd_simstudy(&tiny_pool, &global).unwrap_err()),
            2
        );
    }
}

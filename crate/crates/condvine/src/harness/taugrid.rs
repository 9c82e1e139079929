//! `tau-grid`: conditional Kendall's τ of one pair over a grid of values
//! of the conditioning pair, in a four-variable model.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::format::{fmt_g, read_numeric_csv};
use crate::gof::conditional_tau_grid;

use super::{Execution, GlobalOpts, NutsFlags};

/// Default post-warmup iterations per chain: 100 pooled draws per
/// replication at four chains and stride-10 thinning.
const DEFAULT_ITERATIONS: usize = 250;

/// Arguments of the `tau-grid` subcommand.
#[derive(Debug, Clone)]
pub struct TauGridArgs {
    pub model: PathBuf,
    /// The measured pair, 1-based.
    pub c1: (usize, usize),
    /// The conditioning pair: first and second grid axis.
    pub c2: (usize, usize),
    /// Grid resolution per axis.
    pub grid: (usize, usize),
    /// Replications per cell.
    pub reps: usize,
    /// Optional u-scale data CSV (four columns, variable order); when
    /// given, a per-cell observation count table is written alongside.
    pub data: Option<PathBuf>,
    pub nuts: NutsFlags,
}

/// Estimates the conditional τ surface cell by cell and writes one CSV
/// row per cell; with a data file, also writes how many observed rows
/// fall nearest to each grid node.
pub fn cmd_tau_grid(args: &TauGridArgs, global: &GlobalOpts) -> Result<Execution> {
    let (_, plan) = super::load_model(&args.model)?;
    let (g, h) = args.grid;
    if g == 0 || h == 0 {
        return Err(Error::InvalidArgument("--grid needs positive cell counts".into()));
    }
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be positive".into()));
    }
    let grid_first = interior_grid(g);
    let grid_second = interior_grid(h);
    let config = args.nuts.build(DEFAULT_ITERATIONS, global.seed)?;
    let grid =
        conditional_tau_grid(&plan, args.c1, args.c2, &grid_first, &grid_second, &config, args.reps)?;

    let mut csv =
        String::from("row,col,first_value,second_value,mean_tau,tau_q05,tau_q95,reps_completed,failed\n");
    for cell in &grid.cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            cell.row,
            cell.col,
            fmt_g(cell.c2_first, 12),
            fmt_g(cell.c2_second, 12),
            fmt_g(cell.mean_tau, 12),
            fmt_g(cell.q05, 12),
            fmt_g(cell.q95, 12),
            cell.reps,
            cell.failed
        ));
    }
    let grid_path = global.out_dir.join("taugrid.csv");
    super::write_text(&grid_path, &csv)?;

    let mut out = String::new();
    out.push_str(&format!(
        "conditional tau of ({},{}) given ({},{}) on a {}x{} grid, {} reps per cell\n",
        args.c1.0, args.c1.1, args.c2.0, args.c2.1, g, h, args.reps
    ));
    for row in 0..g {
        let cells: Vec<String> =
            (0..h).map(|col| format!("{:+.3}", grid.cell(row, col).mean_tau)).collect();
        out.push_str(&format!("  {}\n", cells.join(" ")));
    }
    let failed = grid.cells.iter().filter(|c| c.failed).count();
    if failed > 0 {
        out.push_str(&format!("warning: {failed} cells failed in every replication\n"));
    }
    out.push_str(&format!("wrote grid to {}\n", grid_path.display()));

    if let Some(data_path) = &args.data {
        let (_, cols) = read_numeric_csv(data_path)?;
        if cols.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "data file needs 4 variable columns, got {}",
                cols.len()
            )));
        }
        for col in &cols {
            if col.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidArgument(
                    "data file must hold u-scale values in [0,1]".into(),
                ));
            }
        }
        let first = &cols[args.c2.0 - 1];
        let second = &cols[args.c2.1 - 1];
        let mut counts = vec![0usize; g * h];
        for (&a, &b) in first.iter().zip(second) {
            counts[nearest_node(&grid_first, a) * h + nearest_node(&grid_second, b)] += 1;
        }
        let mut counts_csv = String::from("row,col,first_value,second_value,count\n");
        for row in 0..g {
            for col in 0..h {
                counts_csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row,
                    col,
                    fmt_g(grid_first[row], 12),
                    fmt_g(grid_second[col], 12),
                    counts[row * h + col]
                ));
            }
        }
        let counts_path = global.out_dir.join("taugrid_counts.csv");
        super::write_text(&counts_path, &counts_csv)?;
        out.push_str(&format!("wrote per-cell observation counts to {}\n", counts_path.display()));
    }
    Ok(Execution::ok(out))
}

/// `n` equispaced interior points `i/(n+1)`, `i = 1..=n`.
fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Index of the grid node nearest to `x` (cell boundaries at midpoints;
/// boundary ties go to the lower cell).
fn nearest_node(grid: &[f64], x: f64) -> usize {
    let mut idx = 0;
    while idx + 1 < grid.len() && x > 0.5 * (grid[idx] + grid[idx + 1]) {
        idx += 1;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::VineSpecFile;
    use crate::paircop::{Family, PairCopula};
    use crate::vine::testutil::dvine3;
    use crate::vine::{VineEdge, VineSpec};

    fn independence4_file(dir: &std::path::Path) -> PathBuf {
        let indep = || PairCopula::new(Family::Independence, 0, vec![]).unwrap();
        let spec = VineSpec::new(
            4,
            vec![
                vec![
                    VineEdge::new(1, 2, vec![], indep()),
                    VineEdge::new(2, 3, vec![], indep()),
                    VineEdge::new(3, 4, vec![], indep()),
                ],
                vec![
                    VineEdge::new(1, 3, vec![2], indep()),
                    VineEdge::new(2, 4, vec![3], indep()),
                ],
                vec![VineEdge::new(1, 4, vec![2, 3], indep())],
            ],
        )
        .unwrap();
        let path = dir.join("indep4.json");
        VineSpecFile::new(spec).write(&path).unwrap();
        path
    }

    fn quick_args(model: PathBuf) -> TauGridArgs {
        TauGridArgs {
            model,
            c1: (1, 2),
            c2: (3, 4),
            grid: (2, 2),
            reps: 2,
            data: None,
            nuts: NutsFlags {
                iterations: Some(100),
                warmup: Some(100),
                chains: Some(2),
                thin: Some(5),
                ..NutsFlags::default()
            },
        }
    }

    #[test]
    fn independence_grid_stays_near_zero_and_has_full_shape() {
        let dir = tempfile::tempdir().unwrap();
        let model = independence4_file(dir.path());
        let global = GlobalOpts { seed: 17, out_dir: dir.path().join("out") };
        let out = cmd_tau_grid(&quick_args(model), &global).unwrap();
        assert_eq!(out.exit, 0);

        let text = std::fs::read_to_string(dir.path().join("out/taugrid.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4, "header plus g*h rows");
        assert!(lines[0].starts_with("row,col,first_value,second_value,mean_tau"));
        for line in &lines[1..] {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 9);
            let mean: f64 = cells[4].parse().unwrap();
            assert!(mean.abs() < 0.35, "independence tau too large: {line}");
            assert_eq!(cells[8], "false");
        }
    }

    #[test]
    fn grid_output_is_deterministic_under_the_seed() {
        let dir = tempfile::tempdir().unwrap();
        let model = independence4_file(dir.path());
        for sub in ["a", "b"] {
            let global = GlobalOpts { seed: 3, out_dir: dir.path().join(sub) };
            cmd_tau_grid(&quick_args(model.clone()), &global).unwrap();
        }
        let a = std::fs::read(dir.path().join("a/taugrid.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/taugrid.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn observation_counts_follow_nearest_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let model = independence4_file(dir.path());
        // 2x2 grid on each axis: nodes at 1/3 and 2/3, boundary at 1/2.
        let data_path = dir.path().join("obs.csv");
        std::fs::write(
            &data_path,
            "u1,u2,u3,u4\n\
             0.5,0.5,0.1,0.1\n\
             0.5,0.5,0.2,0.9\n\
             0.5,0.5,0.8,0.2\n\
             0.5,0.5,0.9,0.95\n\
             0.5,0.5,0.49,0.51\n",
        )
        .unwrap();
        let mut args = quick_args(model);
        args.data = Some(data_path);
        let global = GlobalOpts { seed: 17, out_dir: dir.path().join("out") };
        cmd_tau_grid(&args, &global).unwrap();

        let text = std::fs::read_to_string(dir.path().join("out/taugrid_counts.csv")).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            counts.insert((cells[0].to_string(), cells[1].to_string()), cells[4].to_string());
        }
        assert_eq!(counts[&("0".into(), "0".into())], "1");
        assert_eq!(counts[&("0".into(), "1".into())], "2", "0.51 crosses the midpoint");
        assert_eq!(counts[&("1".into(), "0".into())], "1");
        assert_eq!(counts[&("1".into(), "1".into())], "1");
    }

    #[test]
    fn wrong_dimension_and_bad_grid_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let global = GlobalOpts { seed: 0, out_dir: dir.path().to_path_buf() };

        let three = dir.path().join("three.json");
        VineSpecFile::new(dvine3()).write(&three).unwrap();
        let err = cmd_tau_grid(&quick_args(three), &global).unwrap_err();
        assert_eq!(super::super::exit_code(&err), 2);

        let model = independence4_file(dir.path());
        let mut zero_grid = quick_args(model);
        zero_grid.grid = (0, 2);
        let err = cmd_tau_grid(&zero_grid, &global).unwrap_err();
        assert_eq!(super::super::exit_code(&err), 2);
    }
}

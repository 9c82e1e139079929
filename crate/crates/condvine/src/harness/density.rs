//! `density`: evaluate the model's log density at one point.

use std::path::PathBuf;

use crate::error::{Error, Result};

use super::{load_model, validate_unit_open, Execution};

/// Arguments of the `density` subcommand.
#[derive(Debug, Clone)]
pub struct DensityArgs {
    /// Model JSON file.
    pub model: PathBuf,
    /// Evaluation point on the u scale, one entry per variable.
    pub point: Vec<f64>,
}

/// Prints the log density at the given point with twelve digits after
/// the decimal point.
pub fn cmd_density(args: &DensityArgs) -> Result<Execution> {
    let (_, plan) = load_model(&args.model)?;
    if args.point.len() != plan.dim() {
        return Err(Error::InvalidArgument(format!(
            "--point has {} entries but the model has {} variables",
            args.point.len(),
            plan.dim()
        )));
    }
    validate_unit_open("--point", &args.point)?;
    let value = plan.log_density(&args.point);
    Ok(Execution::ok(format!("{value:.12}\n")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::VineSpecFile;
    use crate::paircop::{Family, PairCopula};
    use crate::vine::testutil::dvine3;
    use crate::vine::{VineEdge, VineSpec};

    fn write_spec(dir: &std::path::Path, name: &str, spec: VineSpec) -> PathBuf {
        let path = dir.join(name);
        VineSpecFile::new(spec).write(&path).unwrap();
        path
    }

    #[test]
    fn independence_logs_zero_everywhere() {
        let dir = tempfile::tempdir().unwrap();
        let edge = VineEdge::new(
            1,
            2,
            vec![],
            PairCopula::new(Family::Independence, 0, vec![]).unwrap(),
        );
        let spec = VineSpec::new(2, vec![vec![edge]]).unwrap();
        let path = write_spec(dir.path(), "indep.json", spec);
        let out = cmd_density(&DensityArgs { model: path, point: vec![0.3, 0.7] }).unwrap();
        assert_eq!(out.stdout, "0.000000000000\n");
        assert_eq!(out.exit, 0);
    }

    #[test]
    fn output_matches_the_library_evaluation() {
        let dir = tempfile::tempdir().unwrap();
        let spec = dvine3();
        let plan = spec.compile().unwrap();
        let point = vec![0.3, 0.5, 0.7];
        let expect = format!("{:.12}\n", plan.log_density(&point));
        let path = write_spec(dir.path(), "dvine3.json", spec);
        let out = cmd_density(&DensityArgs { model: path, point }).unwrap();
        assert_eq!(out.stdout, expect);
    }

    #[test]
    fn bad_inputs_are_rejected_as_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_spec(dir.path(), "m.json", dvine3());

        let wrong_len =
            cmd_density(&DensityArgs { model: path.clone(), point: vec![0.5, 0.5] }).unwrap_err();
        assert_eq!(super::super::exit_code(&wrong_len), 2);

        let outside =
            cmd_density(&DensityArgs { model: path, point: vec![0.3, 0.5, 1.2] }).unwrap_err();
        assert_eq!(super::super::exit_code(&outside), 2);

        let missing = cmd_density(&DensityArgs {
            model: dir.path().join("absent.json"),
            point: vec![0.5, 0.5, 0.5],
        })
        .unwrap_err();
        assert_eq!(super::super::exit_code(&missing), 2);
    }

    #[test]
    fn malformed_models_name_the_offending_edge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{
  "dimension": 2,
  "trees": [[{"conditioned": [1, 2], "conditioning": [], "family": "clayton", "rotation": 0, "parameters": [-2.0]}]]
}"#,
        )
        .unwrap();
        let err =
            cmd_density(&DensityArgs { model: path, point: vec![0.5, 0.5] }).unwrap_err();
        assert_eq!(super::super::exit_code(&err), 2);
        let msg = err.to_string();
        assert!(msg.contains("tree 1 edge 1"), "edge identity missing from: {msg}");
    }
}

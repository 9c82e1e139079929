use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// A concrete rule broken by a vine structure, pointing at the first
/// offending edge so the caller can fix the input file.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureViolation {
    /// 1-based tree level of the offending edge (0 when the problem is global,
    /// e.g. a wrong tree count).
    pub tree: usize,
    /// Human-readable identification of the edge, e.g. "(1,3;{})".
    pub edge: String,
    /// The rule that failed.
    pub rule: String,
}

impl std::fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.tree == 0 {
            write!(f, "{}: {}", self.edge, self.rule)
        } else {
            write!(f, "tree {} edge {}: {}", self.tree, self.edge, self.rule)
        }
    }
}

impl std::error::Error for StructureViolation {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Copula parameters outside the family's admissible range.
    #[error("invalid parameters for {family}: {detail}")]
    InvalidParameters { family: &'static str, detail: String },

    /// Malformed call arguments (lengths, index sets, ranges).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The vine structure violates a tree-sequence rule.
    #[error("invalid vine structure: {0}")]
    Structure(#[from] StructureViolation),

    /// Adaptive quadrature failed its refinement check.
    #[error("quadrature did not reach tolerance in {context}: refinement changed the result by {achieved:.3e} (allowed {required:.3e})")]
    Quadrature { context: String, achieved: f64, required: f64 },

    /// An iterative numeric routine hit its iteration cap.
    #[error("{op} did not converge after {iterations} iterations")]
    NonConvergence { op: &'static str, iterations: usize },

    /// All attempts to find a finite-density chain start failed.
    #[error("chain initialization failed after {attempts} attempts: {detail}")]
    InitFailure { attempts: usize, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// File-format errors (JSON/CSV parsing, schema mismatches).
    #[error("parse error in {what}: {detail}")]
    Parse { what: String, detail: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse { what: what.into(), detail: detail.into() }
    }
}

//! Verification machinery for conditional samples: distributional tests
//! (KS, Kendall-τ independence, Rosenblatt batteries), MCMC convergence
//! diagnostics, boundary-aware density estimates, forecast metrics, and
//! conditional dependence surfaces.

mod kde;
mod ks;
mod mcmc;
mod metrics;
mod rosenblatt;
mod tau;
mod taugrid;

pub use kde::{kde_boundary_bivariate, kde_boundary_univariate, KdeMeta};
pub use ks::ks_uniform_test;
pub use mcmc::{diagnostics, ess, split_rhat, CoordinateDiagnostics, DiagnosticsReport};
pub use metrics::{pinball, rmse};
pub use rosenblatt::{pit_univariate, rosenblatt_battery, GofReport, TestResult};
pub use tau::{kendall_tau, tau_independence_test, tau_independence_z};
pub use taugrid::{conditional_tau_grid, TauGrid, TauGridCell};

//! Simplified regular-vine copulas: density evaluation, conditional sampling
//! via NUTS, goodness-of-fit diagnostics, and structure selection.
//!
//! The crate is organized around four layers:
//!
//! * [`paircop`] — the bivariate pair-copula catalog (Gaussian, Student t,
//!   Clayton, Gumbel, Frank, Joe, BB1, BB7, BB8, independence) with
//!   rotations, h-functions and their inverses, Kendall's tau, and sampling.
//! * [`vine`] — regular-vine structures: validation, joint log-density and
//!   its gradient, Rosenblatt and inverse-Rosenblatt transforms, joint
//!   sampling, and low-dimensional conditional densities by quadrature.
//! * [`hmc`] — a No-U-Turn sampler over logit-unconstrained copula data,
//!   used to draw from arbitrary conditional distributions of a vine.
//! * [`gof`] + [`select`] — verification machinery (uniformity and
//!   independence tests, convergence diagnostics, boundary-aware KDEs,
//!   conditional-dependence grids) and structure/parameter estimation
//!   (Dissmann's greedy MST fit and a partial-correlation forward search).
//!
//! [`format`] handles the JSON model files and CSV sample batches shared
//! with the command-line tool, and [`harness`] hosts the higher-level
//! experiment drivers (simulation studies, stress scenarios, tau grids).
//!
//! Numeric plumbing lives in [`math`]: special functions, forward-mode
//! duals for gradients, Gauss–Legendre quadrature, and 1-d solvers. All
//! pair-copula kernels are generic over [`math::dual::Scalar`] so the same
//! code path yields values and exact directional derivatives.

pub mod error;
pub mod math;
pub mod paircop;
pub mod vine;
pub mod hmc;
pub mod gof;
pub mod select;
pub mod format;
pub mod harness;

pub use error::{Error, Result};

//! Bivariate copula families: densities, conditionals (h-functions), their
//! inverses, Kendall's tau, and sampling.
//!
//! Ten families are supported. The six single-tail families
//! (Clayton/Gumbel/Joe/BB1/BB7/BB8) model positive dependence in their base
//! form and accept counter-clockwise rotations of 90/180/270 degrees to
//! reach the other quadrants; the elliptical families and Frank cover both
//! signs natively and take no rotation.
//!
//! Conventions used throughout the crate:
//! * `hfunc1(u, v) = ∂C/∂u = P(V ≤ v | U = u)` — conditioning on the first
//!   argument; `hfunc2(u, v) = ∂C/∂v`.
//! * `hinv1(p, u)` solves `hfunc1(u, x) = p` for x, i.e. the conditional
//!   quantile of V given U = u; `hinv2(p, v)` solves `hfunc2(x, v) = p`.
//! * All public entry points clamp copula-scale inputs to
//!   `[UNIT_EPS, 1 − UNIT_EPS]`.

mod kernels;

use crate::error::{Error, Result};
use crate::math::dual::{Dual, Scalar};
use crate::math::quad::gauss_legendre_on;
use crate::math::solve::invert_increasing;
use crate::math::special::debye1;
use rand::Rng;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Boundary clamp for copula-scale coordinates.
pub const UNIT_EPS: f64 = 1e-10;

/// Clamp an f64 into the open unit interval.
#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}

/// Clamp a generic scalar; saturating zeroes the tangent, which is the
/// correct subgradient for a flat extension beyond the clamp.
#[inline]
pub(crate) fn clamp_unit_s<S: Scalar>(x: S) -> S {
    let v = x.value();
    if v < UNIT_EPS {
        S::c(UNIT_EPS)
    } else if v > 1.0 - UNIT_EPS {
        S::c(1.0 - UNIT_EPS)
    } else {
        x
    }
}

/// Clamp a probability output to [0, 1]. Deep-tail h-function values can
/// stray past the endpoints by a few ulps of roundoff; genuine tiny tail
/// probabilities (≪ UNIT_EPS) are preserved.
#[inline]
fn clamp_prob_s<S: Scalar>(x: S) -> S {
    let v = x.value();
    if v < 0.0 {
        S::c(0.0)
    } else if v > 1.0 {
        S::c(1.0)
    } else {
        x
    }
}

/// Copula family identifier.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Independence,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
    Bb1,
    Bb7,
    Bb8,
}

impl Family {
    /// All families, in canonical order.
    pub const ALL: [Family; 10] = [
        Family::Independence,
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
        Family::Bb1,
        Family::Bb7,
        Family::Bb8,
    ];

    /// Canonical lowercase name, used in JSON and CLI output.
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::StudentT => "student_t",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
            Family::Joe => "joe",
            Family::Bb1 => "bb1",
            Family::Bb7 => "bb7",
            Family::Bb8 => "bb8",
        }
    }

    /// Number of parameters the family takes.
    pub fn param_count(self) -> usize {
        match self {
            Family::Independence => 0,
            Family::Gaussian | Family::Clayton | Family::Gumbel | Family::Frank | Family::Joe => 1,
            Family::StudentT | Family::Bb1 | Family::Bb7 | Family::Bb8 => 2,
        }
    }

    /// Whether the family models positive dependence only and therefore
    /// accepts rotations.
    pub fn rotatable(self) -> bool {
        matches!(
            self,
            Family::Clayton | Family::Gumbel | Family::Joe | Family::Bb1 | Family::Bb7 | Family::Bb8
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::parse("copula family", format!("unknown family {s:?}")))
    }
}

/// A bivariate copula: family, rotation, and parameters, validated on
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCopula {
    family: Family,
    rotation: u16,
    params: Vec<f64>,
}

impl fmt::Display for PairCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")?;
        if self.rotation != 0 {
            write!(f, " rot {}", self.rotation)?;
        }
        Ok(())
    }
}

fn invalid(family: Family, detail: impl Into<String>) -> Error {
    Error::InvalidParameters { family: family.as_str(), detail: detail.into() }
}

impl PairCopula {
    /// Validate and build a pair copula.
    ///
    /// Parameter ranges: gaussian ρ ∈ (−1, 1); student_t ρ ∈ (−1, 1), ν > 2;
    /// clayton θ > 0; gumbel θ ≥ 1; frank θ ≠ 0; joe θ > 1;
    /// bb1 θ > 0, δ ≥ 1; bb7 θ ≥ 1, δ > 0; bb8 θ ≥ 1, δ ∈ (0, 1].
    /// Rotation must be one of {0, 90, 180, 270} and nonzero rotation is
    /// only accepted for the positive-dependence families.
    pub fn new(family: Family, rotation: u16, params: Vec<f64>) -> Result<Self> {
        if !matches!(rotation, 0 | 90 | 180 | 270) {
            return Err(invalid(family, format!("rotation {rotation} not in {{0, 90, 180, 270}}")));
        }
        if rotation != 0 && !family.rotatable() {
            return Err(invalid(family, format!("family does not accept rotation {rotation}")));
        }
        if params.len() != family.param_count() {
            return Err(invalid(
                family,
                format!("expected {} parameter(s), got {}", family.param_count(), params.len()),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid(family, "parameters must be finite"));
        }
        let ok = match family {
            Family::Independence => true,
            Family::Gaussian => params[0].abs() < 1.0,
            Family::StudentT => params[0].abs() < 1.0 && params[1] > 2.0,
            Family::Clayton => params[0] > 0.0,
            Family::Gumbel => params[0] >= 1.0,
            Family::Frank => params[0] != 0.0,
            Family::Joe => params[0] > 1.0,
            Family::Bb1 => params[0] > 0.0 && params[1] >= 1.0,
            Family::Bb7 => params[0] >= 1.0 && params[1] > 0.0,
            Family::Bb8 => params[0] >= 1.0 && params[1] > 0.0 && params[1] <= 1.0,
        };
        if !ok {
            return Err(invalid(family, format!("parameters {params:?} out of range")));
        }
        Ok(PairCopula { family, rotation, params })
    }

    /// The independence copula.
    pub fn independence() -> Self {
        PairCopula { family: Family::Independence, rotation: 0, params: Vec::new() }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rotation(&self) -> u16 {
        self.rotation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Map (u, v) into the base family's quadrant.
    #[inline]
    fn rot_args<S: Scalar>(&self, u: S, v: S) -> (S, S) {
        match self.rotation {
            0 => (u, v),
            90 => (v.csub_from(1.0), u),
            180 => (u.csub_from(1.0), v.csub_from(1.0)),
            _ => (v, u.csub_from(1.0)),
        }
    }

    /// Log density, generic over the scalar type (used with [`Dual`] for
    /// gradients).
    pub(crate) fn log_pdf_s<S: Scalar>(&self, u: S, v: S) -> S {
        let (u, v) = (clamp_unit_s(u), clamp_unit_s(v));
        let (a, b) = self.rot_args(u, v);
        kernels::log_pdf(self.family, &self.params, a, b)
    }

    /// `hfunc1` generic over the scalar type.
    pub(crate) fn hfunc1_s<S: Scalar>(&self, u: S, v: S) -> S {
        let (u, v) = (clamp_unit_s(u), clamp_unit_s(v));
        let one = 1.0;
        let (f, p) = (self.family, self.params.as_slice());
        clamp_prob_s(match self.rotation {
            0 => kernels::hfunc1(f, p, u, v),
            90 => kernels::hfunc1(f, p, u, v.csub_from(one)).csub_from(one),
            180 => kernels::hfunc1(f, p, u.csub_from(one), v.csub_from(one)).csub_from(one),
            _ => kernels::hfunc1(f, p, u.csub_from(one), v),
        })
    }

    /// `hfunc2` generic over the scalar type. The base families are all
    /// exchangeable, so the second conditional is the first with swapped
    /// arguments, composed with the rotation.
    pub(crate) fn hfunc2_s<S: Scalar>(&self, u: S, v: S) -> S {
        let (u, v) = (clamp_unit_s(u), clamp_unit_s(v));
        let one = 1.0;
        let (f, p) = (self.family, self.params.as_slice());
        clamp_prob_s(match self.rotation {
            0 => kernels::hfunc1(f, p, v, u),
            90 => kernels::hfunc1(f, p, v.csub_from(one), u),
            180 => kernels::hfunc1(f, p, v.csub_from(one), u.csub_from(one)).csub_from(one),
            _ => kernels::hfunc1(f, p, v, u.csub_from(one)).csub_from(one),
        })
    }

    /// Copula log density at (u, v).
    pub fn log_pdf(&self, u: f64, v: f64) -> f64 {
        self.log_pdf_s(u, v)
    }

    /// Copula density at (u, v).
    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        self.log_pdf(u, v).exp()
    }

    /// Log density together with its gradient in (u, v), computed by two
    /// forward-mode passes.
    pub fn log_pdf_grad(&self, u: f64, v: f64) -> (f64, [f64; 2]) {
        let du = self.log_pdf_s(Dual::var(u), Dual::c(v));
        let dv = self.log_pdf_s(Dual::c(u), Dual::var(v));
        (du.v, [du.d, dv.d])
    }

    /// P(V ≤ v | U = u).
    pub fn hfunc1(&self, u: f64, v: f64) -> f64 {
        self.hfunc1_s(u, v)
    }

    /// P(U ≤ u | V = v).
    pub fn hfunc2(&self, u: f64, v: f64) -> f64 {
        self.hfunc2_s(u, v)
    }

    /// Inverse of the base family's first h-function: solves
    /// `base_hfunc1(w, x) = p` for x. Closed form where available, else a
    /// bracketed numeric inversion (the conditional CDF is increasing in x).
    fn base_hinv1(&self, p: f64, w: f64) -> f64 {
        let (f, par) = (self.family, self.params.as_slice());
        if let Some(x) = kernels::hinv1_closed(f, par, p, w) {
            return clamp_unit(x);
        }
        invert_increasing(
            |x| kernels::hfunc1(f, par, w, x),
            p,
            UNIT_EPS,
            1.0 - UNIT_EPS,
            1e-14,
        )
        .expect("conditional CDF inversion is bisection-safe")
    }

    /// Conditional quantile of V given U = u: solves `hfunc1(u, x) = p`.
    pub fn hinv1(&self, p: f64, u: f64) -> f64 {
        let (p, u) = (clamp_unit(p), clamp_unit(u));
        match self.rotation {
            0 => self.base_hinv1(p, u),
            90 => 1.0 - self.base_hinv1(1.0 - p, u),
            180 => 1.0 - self.base_hinv1(1.0 - p, 1.0 - u),
            _ => self.base_hinv1(p, 1.0 - u),
        }
    }

    /// Conditional quantile of U given V = v: solves `hfunc2(x, v) = p`.
    pub fn hinv2(&self, p: f64, v: f64) -> f64 {
        let (p, v) = (clamp_unit(p), clamp_unit(v));
        match self.rotation {
            0 => self.base_hinv1(p, v),
            90 => self.base_hinv1(p, 1.0 - v),
            180 => 1.0 - self.base_hinv1(1.0 - p, 1.0 - v),
            _ => 1.0 - self.base_hinv1(1.0 - p, v),
        }
    }

    /// Kendall's tau implied by the copula. Closed form for most families;
    /// Joe/BB7/BB8 integrate 4·∬ C·c − 1 with a 201-point tensor
    /// Gauss-Legendre rule.
    pub fn tau(&self) -> f64 {
        let base = match self.family {
            Family::Independence => 0.0,
            Family::Gaussian | Family::StudentT => 2.0 * self.params[0].asin() / PI,
            Family::Clayton => self.params[0] / (self.params[0] + 2.0),
            Family::Gumbel => 1.0 - 1.0 / self.params[0],
            Family::Frank => frank_tau(self.params[0]),
            Family::Bb1 => 1.0 - 2.0 / (self.params[1] * (self.params[0] + 2.0)),
            Family::Joe | Family::Bb7 | Family::Bb8 => {
                numeric_base_tau(self.family, &self.params)
            }
        };
        match self.rotation {
            90 | 270 => -base,
            _ => base,
        }
    }

    /// Draw n pairs by conditional inversion: u ~ U(0,1), w ~ U(0,1),
    /// v = hinv1(w, u).
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<[f64; 2]> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let w: f64 = rng.gen();
                [u, self.hinv1(w, u)]
            })
            .collect()
    }
}

/// Kendall's tau of the Frank copula, valid for either sign of θ.
/// The direct formula is 0/0 at the origin; a Taylor expansion covers the
/// neighborhood so the function is smooth and monotone through θ = 0.
fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-5 {
        theta / 9.0 - theta.powi(3) / 900.0
    } else {
        1.0 - 4.0 / theta * (1.0 - debye1(theta))
    }
}

/// 4·∬ C(u,v) c(u,v) du dv − 1 on a 201-point tensor Gauss-Legendre grid.
fn numeric_base_tau(family: Family, params: &[f64]) -> f64 {
    let (xs, ws) = gauss_legendre_on(201, 0.0, 1.0);
    let mut acc = 0.0;
    for (&xi, &wi) in xs.iter().zip(&ws) {
        let mut row = 0.0;
        for (&xj, &wj) in xs.iter().zip(&ws) {
            let c = kernels::cdf(family, params, xi, xj);
            let dens = kernels::log_pdf(family, params, xi, xj).exp();
            row += wj * c * dens;
        }
        acc += wi * row;
    }
    4.0 * acc - 1.0
}

/// Build the pair copula of a one-parameter family whose Kendall tau equals
/// `tau` under the given rotation.
///
/// Supported: independence (tau must be 0), gaussian, clayton, gumbel,
/// frank, joe. Two-parameter families have no unique tau preimage and are
/// rejected.
pub fn tau_inverse(family: Family, rotation: u16, tau: f64) -> Result<PairCopula> {
    if !tau.is_finite() || tau.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("tau {tau} outside (-1, 1)")));
    }
    // undo the rotation's sign flip to get the base family's tau
    let tb = match rotation {
        90 | 270 => -tau,
        _ => tau,
    };
    let cannot = |detail: String| Error::InvalidArgument(detail);
    match family {
        Family::Independence => {
            if tau.abs() > 1e-9 {
                return Err(cannot(format!("independence cannot reach tau {tau}")));
            }
            Ok(PairCopula::independence())
        }
        Family::Gaussian => {
            PairCopula::new(family, rotation, vec![(PI * tau / 2.0).sin()])
        }
        Family::Clayton => {
            if tb <= 1e-9 || tb > 0.99 {
                return Err(cannot(format!(
                    "clayton (rotation {rotation}) cannot reach tau {tau}"
                )));
            }
            PairCopula::new(family, rotation, vec![2.0 * tb / (1.0 - tb)])
        }
        Family::Gumbel => {
            if tb < 0.0 || tb > 0.99 {
                return Err(cannot(format!(
                    "gumbel (rotation {rotation}) cannot reach tau {tau}"
                )));
            }
            PairCopula::new(family, rotation, vec![1.0 / (1.0 - tb)])
        }
        Family::Frank => {
            if tb.abs() < 1e-9 || tb.abs() > 0.99 {
                return Err(cannot(format!("frank cannot reach tau {tau}")));
            }
            let theta = invert_increasing(frank_tau, tb, -450.0, 450.0, 1e-11)?;
            PairCopula::new(family, rotation, vec![theta])
        }
        Family::Joe => {
            if tb <= 1e-6 {
                return Err(cannot(format!(
                    "joe (rotation {rotation}) cannot reach tau {tau}"
                )));
            }
            let tau_fn = |th: f64| numeric_base_tau(Family::Joe, &[th]);
            if tb >= tau_fn(100.0) {
                return Err(cannot(format!("joe cannot reach tau {tau} below theta = 100")));
            }
            let theta = invert_increasing(tau_fn, tb, 1.0 + 1e-8, 100.0, 1e-8)?;
            PairCopula::new(family, rotation, vec![theta])
        }
        Family::StudentT | Family::Bb1 | Family::Bb7 | Family::Bb8 => Err(cannot(format!(
            "tau_inverse is defined for one-parameter families, not {family}"
        ))),
    }
}

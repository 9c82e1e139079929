//! Forward-mode automatic differentiation with a single tangent.
//!
//! Pair-copula kernels are written once, generic over [`Scalar`]; running
//! them on [`Dual`] yields the exact derivative with respect to whichever
//! input carries a unit tangent. Copula parameters stay `f64` (we only ever
//! differentiate with respect to data coordinates, not parameters).

use super::special;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic interface shared by `f64` and [`Dual`].
///
/// The unary primitives carry hand-written derivative rules; everything else
/// composes through the ring operations.
pub trait Scalar:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lift a constant (zero tangent).
    fn c(x: f64) -> Self;
    /// Primal value.
    fn value(self) -> f64;

    fn ln(self) -> Self;
    fn ln_1p(self) -> Self;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn sqrt(self) -> Self;
    /// Power with a constant exponent.
    fn powf(self, e: f64) -> Self;
    fn recip(self) -> Self;
    fn norm_ppf(self) -> Self;
    fn norm_cdf(self) -> Self;
    fn t_ppf(self, nu: f64) -> Self;
    fn t_cdf(self, nu: f64) -> Self;

    /// self + constant
    fn cadd(self, x: f64) -> Self {
        self + Self::c(x)
    }
    /// self * constant
    fn cmul(self, x: f64) -> Self {
        self * Self::c(x)
    }
    /// constant - self
    fn csub_from(self, x: f64) -> Self {
        Self::c(x) - self
    }
}

impl Scalar for f64 {
    #[inline]
    fn c(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    #[inline]
    fn recip(self) -> Self {
        f64::recip(self)
    }
    #[inline]
    fn norm_ppf(self) -> Self {
        special::norm_ppf(self)
    }
    #[inline]
    fn norm_cdf(self) -> Self {
        special::norm_cdf(self)
    }
    #[inline]
    fn t_ppf(self, nu: f64) -> Self {
        special::t_ppf(self, nu)
    }
    #[inline]
    fn t_cdf(self, nu: f64) -> Self {
        special::t_cdf(self, nu)
    }
}

/// First-order dual number: value `v` and tangent `d`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    #[inline]
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
    /// The independent variable: unit tangent.
    #[inline]
    pub fn var(v: f64) -> Self {
        Dual { v, d: 1.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}
impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}
impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl Scalar for Dual {
    #[inline]
    fn c(x: f64) -> Self {
        Dual::new(x, 0.0)
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        Dual::new(self.v.ln_1p(), self.d / (1.0 + self.v))
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    #[inline]
    fn exp_m1(self) -> Self {
        Dual::new(self.v.exp_m1(), self.d * self.v.exp())
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, 0.5 * self.d / s)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        let p = self.v.powf(e);
        Dual::new(p, e * self.v.powf(e - 1.0) * self.d)
    }
    #[inline]
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        Dual::new(r, -r * r * self.d)
    }
    #[inline]
    fn norm_ppf(self) -> Self {
        let x = special::norm_ppf(self.v);
        Dual::new(x, self.d / special::norm_pdf(x))
    }
    #[inline]
    fn norm_cdf(self) -> Self {
        Dual::new(special::norm_cdf(self.v), self.d * special::norm_pdf(self.v))
    }
    #[inline]
    fn t_ppf(self, nu: f64) -> Self {
        let x = special::t_ppf(self.v, nu);
        Dual::new(x, self.d / special::t_pdf(x, nu))
    }
    #[inline]
    fn t_cdf(self, nu: f64) -> Self {
        Dual::new(special::t_cdf(self.v, nu), self.d * special::t_pdf(self.v, nu))
    }
}

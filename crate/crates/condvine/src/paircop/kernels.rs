//! Unrotated pair-copula kernels, generic over the scalar type.
//!
//! Every base family here is exchangeable, so only the first conditional
//! h₁(u,v) = ∂C/∂u is implemented; h₂ follows by swapping arguments.
//! Rotations are composed a level up in [`super`].
//!
//! Numeric style: quantities that can overflow for strong dependence
//! (Clayton/BB1 powers of u^{-θ}) are carried in log space, and expressions
//! of the form 1−x^k near x→1 go through `ln_1p`/`exp_m1` so that tail
//! behavior survives in double precision.

use super::Family;
use crate::math::dual::Scalar;
use crate::math::special::ln_gamma;

/// ln(1 + e^x), continuous and overflow-free for large x.
fn ln1p_exp<S: Scalar>(x: S) -> S {
    if x.value() > 35.0 {
        // ln(1+e^x) = x + ln(1+e^{-x}) ≈ x + e^{-x}
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// ln |e^x − 1|, overflow-free for large positive x.
fn ln_abs_expm1<S: Scalar>(x: S) -> S {
    if x.value() > 35.0 {
        x
    } else if x.value() > 0.0 {
        x.exp_m1().ln()
    } else {
        (-(x.exp_m1())).ln()
    }
}

/// log of the copula density c(u, v).
pub(crate) fn log_pdf<S: Scalar>(family: Family, p: &[f64], u: S, v: S) -> S {
    match family {
        Family::Independence => S::c(0.0),
        Family::Gaussian => {
            let rho = p[0];
            let r2 = 1.0 - rho * rho;
            let x = u.norm_ppf();
            let y = v.norm_ppf();
            let q = (x * x + y * y).cmul(rho * rho) - (x * y).cmul(2.0 * rho);
            S::c(-0.5 * r2.ln()) - q.cmul(0.5 / r2)
        }
        Family::StudentT => {
            let (rho, nu) = (p[0], p[1]);
            let r2 = 1.0 - rho * rho;
            let x = u.t_ppf(nu);
            let y = v.t_ppf(nu);
            let q = x * x - (x * y).cmul(2.0 * rho) + y * y;
            let konst = ln_gamma((nu + 2.0) / 2.0) + ln_gamma(nu / 2.0)
                - 2.0 * ln_gamma((nu + 1.0) / 2.0)
                - 0.5 * r2.ln();
            S::c(konst) - q.cmul(1.0 / (nu * r2)).ln_1p().cmul(0.5 * (nu + 2.0))
                + (x * x).cmul(1.0 / nu).ln_1p().cmul(0.5 * (nu + 1.0))
                + (y * y).cmul(1.0 / nu).ln_1p().cmul(0.5 * (nu + 1.0))
        }
        Family::Clayton => {
            let th = p[0];
            let (lu, lv) = (u.ln(), v.ln());
            let ls = clayton_ln_s(th, lu, lv);
            S::c((1.0 + th).ln()) - (lu + lv).cmul(th + 1.0) - ls.cmul(1.0 / th + 2.0)
        }
        Family::Gumbel => {
            let th = p[0];
            let (lu, lv) = (u.ln(), v.ln());
            // ln s = ln(x̃^θ + ỹ^θ) via log-sum-exp; x̃^θ alone underflows
            // near the (1,1) corner for large θ
            let (lxt, lyt) = ((-lu).ln(), (-lv).ln());
            let ls = lse2(lxt.cmul(th), lyt.cmul(th));
            let w = ls.cmul(1.0 / th).exp();
            -w - lu - lv
                + (lxt + lyt).cmul(th - 1.0)
                + ls.cmul(1.0 / th - 2.0)
                + w.cadd(th - 1.0).ln()
        }
        Family::Frank => {
            let th = p[0];
            // |D| for D = e^{−θu}(e^{−θv}−1) + e^{−θv}(e^{−θ(1−v)}−1):
            // the two terms share the sign of −θ, so the log of the absolute
            // sum is a plain log-sum-exp — no cancellation at strong
            // dependence, no overflow for θ < 0
            let l1 = u.cmul(-th) + ln_abs_expm1(v.cmul(-th));
            let l2 = v.cmul(-th) + ln_abs_expm1(v.csub_from(1.0).cmul(-th));
            let konst = th.abs().ln() + ln_abs_expm1(-th);
            S::c(konst) - (u + v).cmul(th) - lse2(l1, l2).cmul(2.0)
        }
        Family::Joe => {
            let th = p[0];
            let (ub, vb) = (u.csub_from(1.0), v.csub_from(1.0));
            let tu = ub.powf(th);
            let tv = vb.powf(th);
            let k = tu + tv - tu * tv;
            // 1 − t = 1 − (1−u)^θ, stable when u → 0
            let cu = -(ub.ln().cmul(th)).exp_m1();
            let cv = -(vb.ln().cmul(th)).exp_m1();
            (ub.ln() + vb.ln()).cmul(th - 1.0) + k.ln().cmul(1.0 / th - 2.0)
                + (k.cmul(th) + (cu * cv).cmul(th - 1.0)).ln()
        }
        Family::Bb1 => {
            let (th, de) = (p[0], p[1]);
            let (lu, lv) = (u.ln(), v.ln());
            // ln x = δ ln(u^{−θ}−1), all in logs to survive strong dependence
            let lx = (-lu.cmul(th)).exp_m1().ln().cmul(de);
            let ly = (-lv.cmul(th)).exp_m1().ln().cmul(de);
            let ls = lse2(lx, ly);
            let lw = ls.cmul(1.0 / de);
            -(lu + lv).cmul(th + 1.0) + (lx + ly).cmul(1.0 - 1.0 / de)
                + ls.cmul(1.0 / de - 2.0)
                - ln1p_exp(lw).cmul(1.0 / th + 2.0)
                + lw
                + ((-lw).exp().cmul(th * (de - 1.0)).cadd(1.0 + th * de)).ln()
        }
        Family::Bb7 => {
            let (th, de) = (p[0], p[1]);
            let (ub, vb) = (u.csub_from(1.0), v.csub_from(1.0));
            let ltu = (-(ub.powf(th))).ln_1p(); // ln(1 − (1−u)^θ)
            let ltv = (-(vb.powf(th))).ln_1p();
            // S − 1 = (t_u^{−δ} − 1) + (t_v^{−δ} − 1), stable near S → 1
            let sm1 = (ltu.cmul(-de)).exp_m1() + (ltv.cmul(-de)).exp_m1();
            let ln_s = sm1.ln_1p();
            let m = -((ln_s.cmul(-1.0 / de)).exp_m1()); // 1 − S^{−1/δ}
            let pp = m.csub_from(1.0); // P = S^{−1/δ}
            (ub.ln() + vb.ln()).cmul(th - 1.0) - (ltu + ltv).cmul(de + 1.0)
                + m.ln().cmul(1.0 / th - 2.0)
                - ln_s.cmul(1.0 / de + 2.0)
                + (m.cmul(th * (1.0 + de)) + pp.cmul(th - 1.0)).ln()
        }
        Family::Bb8 => {
            let (th, de) = (p[0], p[1]);
            let eta = -f64::exp_m1(th * f64::ln_1p(-de)); // 1 − (1−δ)^θ
            let lxu = (u.cmul(-de)).ln_1p().cmul(th); // ln (1−δu)^θ
            let lxv = (v.cmul(-de)).ln_1p().cmul(th);
            let (xbar, ybar) = (lxu.exp(), lxv.exp()); // (1−δu)^θ, (1−δv)^θ
            let zbar = f64::exp(th * f64::ln_1p(-de)); // (1−δ)^θ
            // A = 1 − (1−x̄)(1−ȳ)/η = [(x̄−z̄) + ȳ(1−x̄)] / η : sums of
            // nonnegative terms, no cancellation at the (1,1) corner
            let a = (xbar.cadd(-zbar) + ybar * xbar.csub_from(1.0)).cmul(1.0 / eta);
            S::c((th * de / eta).ln()) + (lxu + lxv).cmul((th - 1.0) / th)
                + a.ln().cmul(1.0 / th - 2.0)
                + (a.cadd(th - 1.0).cmul(1.0 / th)).ln()
        }
    }
}

/// First h-function of the base family: h₁(u,v) = ∂C/∂u = P(V ≤ v | U = u).
pub(crate) fn hfunc1<S: Scalar>(family: Family, p: &[f64], u: S, v: S) -> S {
    match family {
        Family::Independence => v,
        Family::Gaussian => {
            let rho = p[0];
            let r2 = 1.0 - rho * rho;
            ((v.norm_ppf() - u.norm_ppf().cmul(rho)).cmul(1.0 / r2.sqrt())).norm_cdf()
        }
        Family::StudentT => {
            let (rho, nu) = (p[0], p[1]);
            let r2 = 1.0 - rho * rho;
            let x = u.t_ppf(nu);
            let y = v.t_ppf(nu);
            let scale = ((x * x).cadd(nu).cmul(r2 / (nu + 1.0))).sqrt();
            ((y - x.cmul(rho)) / scale).t_cdf(nu + 1.0)
        }
        Family::Clayton => {
            let th = p[0];
            let (lu, lv) = (u.ln(), v.ln());
            let ls = clayton_ln_s(th, lu, lv);
            (lu.cmul(-(th + 1.0)) - ls.cmul(1.0 / th + 1.0)).exp()
        }
        Family::Gumbel => {
            let th = p[0];
            let (lu, lv) = (u.ln(), v.ln());
            let (lxt, lyt) = ((-lu).ln(), (-lv).ln());
            let ls = lse2(lxt.cmul(th), lyt.cmul(th));
            let w = ls.cmul(1.0 / th).exp();
            (-w + lxt.cmul(th - 1.0) + ls.cmul(1.0 / th - 1.0) - lu).exp()
        }
        Family::Frank => {
            // h₁ = t₁/(t₁+t₂) with t₁ = e^{−θu}(e^{−θv}−1),
            // t₂ = e^{−θv}(e^{−θ(1−v)}−1); the terms share a sign, so the
            // ratio is computed from their logs
            let th = p[0];
            let l1 = u.cmul(-th) + ln_abs_expm1(v.cmul(-th));
            let l2 = v.cmul(-th) + ln_abs_expm1(v.csub_from(1.0).cmul(-th));
            (l1 - lse2(l1, l2)).exp()
        }
        Family::Joe => {
            let th = p[0];
            let (ub, vb) = (u.csub_from(1.0), v.csub_from(1.0));
            let tu = ub.powf(th);
            let tv = vb.powf(th);
            let k = tu + tv - tu * tv;
            let cv = -(vb.ln().cmul(th)).exp_m1(); // 1 − (1−v)^θ
            k.powf(1.0 / th - 1.0) * ub.powf(th - 1.0) * cv
        }
        Family::Bb1 => {
            let (th, de) = (p[0], p[1]);
            let (lu, lv) = (u.ln(), v.ln());
            let lx = (-lu.cmul(th)).exp_m1().ln().cmul(de);
            let ly = (-lv.cmul(th)).exp_m1().ln().cmul(de);
            let ls = lse2(lx, ly);
            let lw = ls.cmul(1.0 / de);
            (-ln1p_exp(lw).cmul(1.0 / th + 1.0) + lw.cmul(1.0 - de) + lx.cmul(1.0 - 1.0 / de)
                - lu.cmul(th + 1.0))
            .exp()
        }
        Family::Bb7 => {
            let (th, de) = (p[0], p[1]);
            let (ub, vb) = (u.csub_from(1.0), v.csub_from(1.0));
            let ltu = (-(ub.powf(th))).ln_1p();
            let ltv = (-(vb.powf(th))).ln_1p();
            let sm1 = (ltu.cmul(-de)).exp_m1() + (ltv.cmul(-de)).exp_m1();
            let ln_s = sm1.ln_1p();
            let m = -((ln_s.cmul(-1.0 / de)).exp_m1());
            (m.ln().cmul(1.0 / th - 1.0) - ln_s.cmul(1.0 / de + 1.0) + ub.ln().cmul(th - 1.0)
                - ltu.cmul(de + 1.0))
            .exp()
        }
        Family::Bb8 => {
            let (th, de) = (p[0], p[1]);
            let eta = -f64::exp_m1(th * f64::ln_1p(-de));
            let lxu = (u.cmul(-de)).ln_1p().cmul(th);
            let lxv = (v.cmul(-de)).ln_1p().cmul(th);
            let (xbar, ybar) = (lxu.exp(), lxv.exp());
            let zbar = f64::exp(th * f64::ln_1p(-de));
            let a = (xbar.cadd(-zbar) + ybar * xbar.csub_from(1.0)).cmul(1.0 / eta);
            let y = -(lxv.exp_m1()); // 1 − (1−δv)^θ
            a.powf(1.0 / th - 1.0) * y * lxu.cmul((th - 1.0) / th).exp().cmul(1.0 / eta)
        }
    }
}

/// ln(u^{−θ} + v^{−θ} − 1) from ln u, ln v without overflow.
fn clayton_ln_s<S: Scalar>(th: f64, lu: S, lv: S) -> S {
    let l1 = lu.cmul(-th);
    let l2 = lv.cmul(-th);
    let m = if l1.value() >= l2.value() { l1 } else { l2 };
    m + ((l1 - m).exp() + (l2 - m).exp() - (-m).exp()).ln()
}

/// log-sum-exp of two terms, tangent-preserving.
fn lse2<S: Scalar>(a: S, b: S) -> S {
    let m = if a.value() >= b.value() { a } else { b };
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Copula CDF of the base family. Only the Archimedean families need this
/// (numeric Kendall tau and cross-checks); the elliptical CDFs have no
/// closed form and are never required.
pub(crate) fn cdf(family: Family, p: &[f64], u: f64, v: f64) -> f64 {
    match family {
        Family::Independence => u * v,
        Family::Clayton => {
            let th = p[0];
            let ls = clayton_ln_s(th, u.ln(), v.ln());
            (-ls / th).exp()
        }
        Family::Gumbel => {
            let th = p[0];
            let s = (-u.ln()).powf(th) + (-v.ln()).powf(th);
            (-s.powf(1.0 / th)).exp()
        }
        Family::Frank => {
            let th = p[0];
            let g1 = f64::exp_m1(-th);
            -f64::ln_1p(f64::exp_m1(-th * u) * f64::exp_m1(-th * v) / g1) / th
        }
        Family::Joe => {
            let th = p[0];
            let tu = (1.0 - u).powf(th);
            let tv = (1.0 - v).powf(th);
            1.0 - (tu + tv - tu * tv).powf(1.0 / th)
        }
        Family::Bb1 => {
            let (th, de) = (p[0], p[1]);
            let lx = f64::exp_m1(-th * u.ln()).ln() * de;
            let ly = f64::exp_m1(-th * v.ln()).ln() * de;
            let lw = lse2(lx, ly) / de;
            (-ln1p_exp(lw) / th).exp()
        }
        Family::Bb7 => {
            let (th, de) = (p[0], p[1]);
            let ltu = f64::ln_1p(-(1.0 - u).powf(th));
            let ltv = f64::ln_1p(-(1.0 - v).powf(th));
            let sm1 = f64::exp_m1(-de * ltu) + f64::exp_m1(-de * ltv);
            let m = -f64::exp_m1(-f64::ln_1p(sm1) / de);
            1.0 - m.powf(1.0 / th)
        }
        Family::Bb8 => {
            let (th, de) = (p[0], p[1]);
            let eta = -f64::exp_m1(th * f64::ln_1p(-de));
            let xbar = (th * f64::ln_1p(-de * u)).exp();
            let ybar = (th * f64::ln_1p(-de * v)).exp();
            let zbar = (th * f64::ln_1p(-de)).exp();
            let a = ((xbar - zbar) + ybar * (1.0 - xbar)) / eta;
            (1.0 - a.powf(1.0 / th)) / de
        }
        Family::Gaussian | Family::StudentT => {
            unreachable!("cdf is not provided for elliptical families")
        }
    }
}

/// Closed-form inverse of h₁ where one exists; `None` means invert
/// numerically against `hfunc1`.
pub(crate) fn hinv1_closed(family: Family, p: &[f64], prob: f64, u: f64) -> Option<f64> {
    match family {
        Family::Independence => Some(prob),
        Family::Gaussian => {
            let rho = p[0];
            let r2 = 1.0 - rho * rho;
            let x = crate::math::special::norm_ppf(u);
            let y = crate::math::special::norm_ppf(prob) * r2.sqrt() + rho * x;
            Some(crate::math::special::norm_cdf(y))
        }
        Family::StudentT => {
            let (rho, nu) = (p[0], p[1]);
            let r2 = 1.0 - rho * rho;
            let x = crate::math::special::t_ppf(u, nu);
            let scale = ((nu + x * x) * r2 / (nu + 1.0)).sqrt();
            let y = crate::math::special::t_ppf(prob, nu + 1.0) * scale + rho * x;
            Some(crate::math::special::t_cdf(y, nu))
        }
        Family::Clayton => {
            let th = p[0];
            // v = [u^{−θ}(p^{−θ/(1+θ)} − 1) + 1]^{−1/θ}
            let a = f64::exp_m1(-th / (1.0 + th) * prob.ln());
            let t = (-th * u.ln()).exp() * a;
            Some((-f64::ln_1p(t) / th).exp())
        }
        Family::Frank => {
            // 1 + gv = (e^{−θu}(1−p) + p·e^{−θ}) / (e^{−θu}(1−p) + p):
            // both numerator and denominator are sums of positive terms for
            // any θ, unlike the textbook expression, which cancels badly
            // once θ·u is large
            let th = p[0];
            let e = (-th * u).exp() * (1.0 - prob);
            let num = e + prob * (-th).exp();
            let den = e + prob;
            Some(-(num.ln() - den.ln()) / th)
        }
        _ => None,
    }
}

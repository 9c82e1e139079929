//! Scalar special functions: log-gamma, error function, normal and Student-t
//! distribution functions with inverses, regularized incomplete beta, and the
//! first Debye function.
//!
//! Everything here is built from series/continued-fraction expansions with
//! safeguarded Newton refinement for the inverses, so accuracy does not hinge
//! on long tables of fitted constants: the only fitted numbers are inversion
//! starting points, which affect iteration count, not the converged result.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74; // ln(2*pi)/2
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Natural log of the gamma function for x > 0.
///
/// Stirling's series with Bernoulli-number coefficients, after shifting the
/// argument above 8 via the recurrence ln Γ(x) = ln Γ(x+1) − ln x.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x.is_nan() {
        return f64::NAN;
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 8.0 {
        shift += y.ln();
        y += 1.0;
    }
    // Stirling: (y-1/2)ln y - y + ln(2π)/2 + Σ B_{2n}/(2n(2n-1) y^{2n-1});
    // truncation after the 1/y^13 term is below 1e-15 relative for y >= 8.
    let r = y.recip();
    let r2 = r * r;
    let series = r
        * (1.0 / 12.0
            + r2 * (-1.0 / 360.0
                + r2 * (1.0 / 1260.0
                    + r2 * (-1.0 / 1680.0
                        + r2 * (1.0 / 1188.0
                            + r2 * (-691.0 / 360_360.0 + r2 * (7.0 / 1092.0)))))));
    (y - 0.5) * y.ln() - y + LN_SQRT_2PI + series - shift
}

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a+b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized lower incomplete gamma P(a, x) by its power series.
/// Converges fast for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by a Lentz continued fraction.
/// Converges fast for x > a + 1.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax2 = x * x;
    let p = if ax2 < 1.5 {
        gamma_p_series(0.5, ax2)
    } else {
        1.0 - gamma_q_cf(0.5, ax2)
    };
    if x > 0.0 {
        p
    } else {
        -p
    }
}

/// Complementary error function, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let x2 = x * x;
    if x2 < 1.5 {
        1.0 - gamma_p_series(0.5, x2)
    } else {
        gamma_q_cf(0.5, x2)
    }
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF, with full relative accuracy in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile function for p in (0, 1).
///
/// Rational approximation start (max error ~4.5e-4) polished by Newton on
/// `norm_cdf`; converges to full double accuracy in at most a handful of
/// steps regardless of the start's quality.
pub fn norm_ppf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_ppf requires p in (0,1), got {p}");
    if p == 0.5 {
        return 0.0;
    }
    // Work in the lower tail so ln(p) is well conditioned.
    let (pl, flip) = if p <= 0.5 { (p, false) } else { (1.0 - p, true) };
    let t = (-2.0 * pl.ln()).sqrt();
    let num = 2.515517 + t * (0.802853 + t * 0.010328);
    let den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308));
    let mut x = -(t - num / den);
    for _ in 0..10 {
        let f = norm_cdf(x) - pl;
        if f == 0.0 {
            break;
        }
        let dx = f / norm_pdf(x);
        x -= dx;
        if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    if flip {
        -x
    } else {
        x
    }
}

/// Regularized incomplete beta I_x(a, b) via the standard Lentz continued
/// fraction, switching to the symmetric form when x is past the central cut.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "inc_beta requires a,b > 0");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        let front_sym = (b * (-x).ln_1p() + a * x.ln() - ln_beta(b, a)).exp();
        1.0 - front_sym * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Student-t density with `nu` degrees of freedom.
pub fn t_pdf(x: f64, nu: f64) -> f64 {
    debug_assert!(nu > 0.0);
    (ln_gamma((nu + 1.0) / 2.0)
        - ln_gamma(nu / 2.0)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p())
    .exp()
}

/// Student-t CDF via the incomplete beta representation.
///
/// Two complementary forms keep the beta argument away from 1: near the
/// center the half-probability is 0.5·I_{x²/(ν+x²)}(1/2, ν/2), in the tails
/// 0.5·I_{ν/(ν+x²)}(ν/2, 1/2).
pub fn t_cdf(x: f64, nu: f64) -> f64 {
    debug_assert!(nu > 0.0);
    if x == 0.0 {
        return 0.5;
    }
    let x2 = x * x;
    if x2 < nu {
        let half = 0.5 * inc_beta(0.5, nu / 2.0, x2 / (nu + x2));
        if x < 0.0 {
            0.5 - half
        } else {
            0.5 + half
        }
    } else {
        let ib = inc_beta(nu / 2.0, 0.5, nu / (nu + x2));
        if x < 0.0 {
            0.5 * ib
        } else {
            1.0 - 0.5 * ib
        }
    }
}

/// Student-t quantile function for p in (0, 1).
///
/// Exact closed forms for nu = 1 and nu = 2; otherwise a normal-quantile
/// start with a tail-order correction, polished by bracketed Newton on
/// `t_cdf`.
pub fn t_ppf(p: f64, nu: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "t_ppf requires p in (0,1), got {p}");
    debug_assert!(nu > 0.0);
    if p == 0.5 {
        return 0.0;
    }
    if nu == 1.0 {
        return (PI * (p - 0.5)).tan();
    }
    if nu == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    let z = norm_ppf(p);
    let mut x = z + (z * z * z + z) / (4.0 * nu);
    // Bracket the root, expanding geometrically if the start is off.
    let (mut lo, mut hi) = (x - 1.0 - 0.5 * x.abs(), x + 1.0 + 0.5 * x.abs());
    for _ in 0..200 {
        if t_cdf(lo, nu) < p {
            break;
        }
        lo = 2.0 * lo - hi;
    }
    for _ in 0..200 {
        if t_cdf(hi, nu) > p {
            break;
        }
        hi = 2.0 * hi - lo;
    }
    for _ in 0..100 {
        let f = t_cdf(x, nu) - p;
        if f > 0.0 {
            hi = x;
        } else if f < 0.0 {
            lo = x;
        } else {
            break;
        }
        let step = f / t_pdf(x, nu).max(1e-300);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

/// First Debye function D₁(x) = (1/x) ∫₀ˣ t/(eᵗ−1) dt, extended to x ≤ 0
/// via D₁(−x) = D₁(x) + x/2.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        return debye1(-x) - x / 2.0;
    }
    if x <= 0.1 {
        // Bernoulli series: 1 - x/4 + x²/36 - x⁴/3600 + x⁶/211680 - …
        let x2 = x * x;
        return 1.0 - x / 4.0 + x2 / 36.0 - x2 * x2 / 3600.0 + x2 * x2 * x2 / 211_680.0;
    }
    // From t/(eᵗ−1) = Σ_{k≥1} t e^{−kt}:
    //   ∫₀ˣ = π²/6 − Σ_{k≥1} e^{−kx} (x/k + 1/k²).
    let mut tail = 0.0;
    let kmax = (45.0 / x).ceil() as usize + 1;
    for k in 1..=kmax {
        let k = k as f64;
        tail += (-k * x).exp() * (x / k + 1.0 / (k * k));
    }
    (PI * PI / 6.0 - tail) / x
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with mpmath at 50 significant digits.

    fn close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol * (1.0 + want.abs()),
            "got {got:.17e}, want {want:.17e}"
        );
    }

    #[test]
    fn ln_gamma_reference_values() {
        // The argument shift costs a couple of ulps of the shifted magnitude,
        // so the tolerance is a few eps rather than one.
        close(ln_gamma(0.1), 2.2527126517342059, 5e-15);
        close(ln_gamma(0.5), 0.57236494292470009, 5e-15);
        close(ln_gamma(1.0), 0.0, 5e-15);
        close(ln_gamma(1.5), -0.12078223763524522, 5e-15);
        close(ln_gamma(2.0), 0.0, 5e-15);
        close(ln_gamma(3.7), 1.4280723266653881, 5e-15);
        close(ln_gamma(5.0), 3.1780538303479456, 5e-15);
        close(ln_gamma(10.0), 12.801827480081470, 5e-15);
        close(ln_gamma(171.5), 709.14316303092824, 1e-14);
        close(ln_gamma(1e-3), 6.9071788853838537, 5e-15);
    }

    #[test]
    fn erf_reference_values() {
        close(erf(0.1), 0.11246291601828490, 1e-15);
        close(erf(0.5), 0.52049987781304654, 1e-15);
        close(erf(1.0), 0.84270079294971487, 1e-15);
        close(erf(2.0), 0.99532226501895273, 1e-15);
        close(erf(3.0), 0.99997790950300141, 1e-15);
        close(erf(5.0), 0.99999999999846254, 1e-15);
        assert_eq!(erf(0.0), 0.0);
        close(erf(-1.0), -0.84270079294971487, 1e-15);
    }

    #[test]
    fn erfc_reference_values_including_far_tail() {
        close(erfc(1.0), 0.15729920705028513, 1e-14);
        // relative accuracy in the tail
        assert!((erfc(2.0) / 0.0046777349810472658 - 1.0).abs() < 1e-13);
        assert!((erfc(3.0) / 2.2090496998585441e-5 - 1.0).abs() < 1e-13);
        assert!((erfc(5.0) / 1.5374597944280349e-12 - 1.0).abs() < 1e-13);
        close(erfc(-2.0), 2.0 - 0.0046777349810472658, 1e-14);
    }

    #[test]
    fn norm_cdf_reference_values() {
        assert!((norm_cdf(-10.0) / 7.6198530241605261e-24 - 1.0).abs() < 1e-12);
        assert!((norm_cdf(-5.0) / 2.8665157187919391e-7 - 1.0).abs() < 1e-13);
        close(norm_cdf(-1.96), 0.024997895148220436, 1e-14);
        close(norm_cdf(-1.0), 0.15865525393145705, 1e-14);
        assert_eq!(norm_cdf(0.0), 0.5);
        close(norm_cdf(0.5), 0.69146246127401310, 1e-15);
        close(norm_cdf(1.0), 0.84134474606854295, 1e-15);
        close(norm_cdf(1.96), 0.97500210485177956, 1e-15);
        close(norm_cdf(5.0), 0.99999971334842812, 1e-15);
    }

    #[test]
    fn norm_ppf_reference_values() {
        close(norm_ppf(0.025), -1.9599639845400542, 1e-13);
        close(norm_ppf(0.1), -1.2815515655446005, 1e-13);
        assert_eq!(norm_ppf(0.5), 0.0);
        close(norm_ppf(0.88), 1.1749867920660900, 1e-13);
        close(norm_ppf(0.975), 1.9599639845400542, 1e-13);
        close(norm_ppf(0.999), 3.0902323061678135, 1e-13);
        close(norm_ppf(1e-10), -6.3613409024040562, 1e-13);
        close(norm_ppf(1e-30), -11.464024688443616, 1e-13);
        close(norm_ppf(1e-300), -37.047096299361199, 1e-13);
    }

    #[test]
    fn norm_ppf_cdf_roundtrip() {
        // z-space roundtrip: limited by the double representation of p near 1,
        // so restrict the upper range.
        let mut z = -37.0;
        while z <= 4.0 {
            let p = norm_cdf(z);
            let back = norm_ppf(p);
            assert!(
                (back - z).abs() < 1e-12 * (1.0 + z.abs()),
                "roundtrip failed at z={z}: got {back}"
            );
            z += 0.173;
        }
        // p-space roundtrip is absolute-tight everywhere.
        for &p in &[1e-10, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-10] {
            assert!((norm_cdf(norm_ppf(p)) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn inc_beta_reference_values() {
        close(inc_beta(0.5, 0.5, 0.3), 0.36901011956554538, 1e-14);
        close(inc_beta(2.0, 3.0, 0.4), 0.5248, 1e-14);
        close(inc_beta(5.0, 1.5, 0.8), 0.50556064881524661, 1e-14);
        close(inc_beta(0.5, 4.0, 0.05), 0.46540785173875507, 1e-14);
        close(inc_beta(10.0, 10.0, 0.5), 0.5, 1e-14);
        assert_eq!(inc_beta(2.0, 2.0, 0.0), 0.0);
        assert_eq!(inc_beta(2.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn t_cdf_reference_values() {
        assert_eq!(t_cdf(0.0, 4.0), 0.5);
        close(t_cdf(1.0, 4.0), 0.81304951684997056, 1e-14);
        close(t_cdf(-2.5, 4.0), 0.033383272405994073, 1e-14);
        close(t_cdf(1.0, 2.5), 0.79796948636086327, 1e-14);
        close(t_cdf(3.0, 7.3), 0.99050972448843325, 1e-14);
        close(t_cdf(-1.0, 30.0), 0.16265430771301495, 1e-14);
    }

    #[test]
    fn t_pdf_matches_cdf_derivative() {
        // central differences of t_cdf vs t_pdf
        for &nu in &[2.5, 4.0, 17.0] {
            for &x in &[-2.0, -0.3, 0.0, 1.4, 3.0] {
                let h = 1e-5;
                let fd = (t_cdf(x + h, nu) - t_cdf(x - h, nu)) / (2.0 * h);
                close(fd, t_pdf(x, nu), 1e-8);
            }
        }
    }

    #[test]
    fn t_ppf_reference_values() {
        close(t_ppf(0.975, 1.0), 12.706204736174705, 1e-12);
        close(t_ppf(0.975, 2.0), 4.3026527297494639, 1e-12);
        close(t_ppf(0.975, 5.0), 2.5705818356363155, 1e-12);
        close(t_ppf(0.9, 4.0), 1.5332062740589439, 1e-12);
        close(t_ppf(0.05, 2.5), -2.5582186141359366, 1e-12);
        close(t_ppf(0.6, 10.0), 0.26018482949208024, 1e-12);
        assert_eq!(t_ppf(0.5, 7.0), 0.0);
    }

    #[test]
    fn t_ppf_cdf_roundtrip() {
        for &nu in &[2.2, 3.0, 4.0, 8.5, 30.0] {
            for i in 1..40 {
                let p = i as f64 / 40.0;
                let x = t_ppf(p, nu);
                assert!(
                    (t_cdf(x, nu) - p).abs() < 1e-13,
                    "roundtrip failed at p={p}, nu={nu}"
                );
            }
            // tails
            for &p in &[1e-8, 1e-4, 1.0 - 1e-4, 1.0 - 1e-8] {
                let x = t_ppf(p, nu);
                assert!((t_cdf(x, nu) - p).abs() < 1e-14 + 1e-10 * p);
            }
        }
    }

    #[test]
    fn debye1_reference_values() {
        close(debye1(0.05), 0.98756944270840714, 1e-14);
        close(debye1(0.5), 0.88192715679060553, 1e-13);
        close(debye1(1.0), 0.77750463411224828, 1e-13);
        close(debye1(5.0), 0.32087619770014612, 1e-13);
        close(debye1(14.13), 0.11641351871902255, 1e-13);
        close(debye1(30.0), 0.054831135561510852, 1e-13);
        close(debye1(-0.5), 1.1319271567906055, 1e-13);
        close(debye1(-5.0), 2.8208761977001461, 1e-13);
        assert_eq!(debye1(0.0), 1.0);
        // series/sum branches agree across the switch point up to the
        // function's own slope (~-1/4) over the 2e-6 gap
        assert!((debye1(0.100001) - debye1(0.099999)).abs() < 1e-6);
    }
}

//! File formats: vine-model JSON, samples CSV with its JSON sidecar,
//! scenario descriptions, quantile tables, numeric data CSV, and fit
//! metadata.
//!
//! Numeric text output is deterministic: JSON model files print floats
//! with 17 significant digits (exact value round-trip), CSV files with 12.
//! Model files written by [`write_vine_spec`] round-trip byte-identically
//! through [`parse_vine_spec`].

mod samples;
mod scenario;
mod table;
mod vinespec;

pub use samples::{
    parse_samples_csv, write_sample_sidecar, write_samples_csv, ParsedSamples,
};
pub use scenario::{
    Direction, QuantileTable, Scenario, ScenarioSpec, ThresholdQuery, VariableCombination,
};
pub use table::{read_numeric_csv, read_numeric_csv_str};
pub use vinespec::{parse_vine_spec, write_fit_metadata, write_vine_spec, VineSpecFile};

/// Formats a float like C's `%.Pg`: `sig` significant digits, fixed or
/// scientific notation chosen by the decimal exponent, trailing zeros
/// trimmed. 17 significant digits reproduce any f64 exactly on re-parse.
pub fn fmt_g(v: f64, sig: usize) -> String {
    assert!(sig >= 1, "need at least one significant digit");
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let neg = v.is_sign_negative();
    let sci = format!("{:.*e}", sig - 1, v.abs());
    let (mantissa, exponent) = sci.split_once('e').expect("{:e} always prints an exponent");
    let x: i32 = exponent.parse().expect("{:e} exponent is an integer");
    let all_digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = all_digits.trim_end_matches('0');
    // v != 0, so the leading mantissa digit is nonzero and survives the trim.
    let body = if x >= -4 && x < sig as i32 {
        if x >= 0 {
            let int_len = x as usize + 1;
            if digits.len() <= int_len {
                format!("{}{}", digits, "0".repeat(int_len - digits.len()))
            } else {
                format!("{}.{}", &digits[..int_len], &digits[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-x - 1) as usize), digits)
        }
    } else {
        let m = if digits.len() == 1 {
            digits.to_string()
        } else {
            format!("{}.{}", &digits[..1], &digits[1..])
        };
        format!("{}e{}{:02}", m, if x < 0 { '-' } else { '+' }, x.abs())
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// JSON string escaping per RFC 8259 (quotes, backslashes, control
/// characters); non-ASCII passes through as UTF-8.
pub(crate) fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_reference_cases() {
        // Reference strings follow C's printf("%.17g", x) / ("%.12g", x).
        assert_eq!(fmt_g(0.0, 17), "0");
        assert_eq!(fmt_g(1.0, 17), "1");
        assert_eq!(fmt_g(2.0, 17), "2");
        assert_eq!(fmt_g(-1.5, 17), "-1.5");
        assert_eq!(fmt_g(0.5, 17), "0.5");
        assert_eq!(fmt_g(0.1, 17), "0.10000000000000001");
        assert_eq!(fmt_g(0.89, 17), "0.89000000000000001");
        assert_eq!(fmt_g(1e-5, 17), "1.0000000000000001e-05");
        assert_eq!(fmt_g(1e5, 17), "100000");
        assert_eq!(fmt_g(1e17, 17), "1e+17");
        assert_eq!(fmt_g(1.25e300, 17), "1.2500000000000001e+300");
        assert_eq!(fmt_g(-3.5e-300, 17), "-3.5000000000000002e-300");
        assert_eq!(fmt_g(1.25e300, 12), "1.25e+300");
        assert_eq!(fmt_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_g(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(fmt_g(123456.0, 12), "123456");
        assert_eq!(fmt_g(0.0001, 12), "0.0001");
        assert_eq!(fmt_g(0.00001, 12), "1e-05");
        assert_eq!(fmt_g(f64::INFINITY, 12), "inf");
        assert_eq!(fmt_g(f64::NAN, 12), "nan");
    }

    #[test]
    fn seventeen_digits_round_trip_any_f64() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20_000 {
            let bits: u64 = rng.gen();
            let v = f64::from_bits(bits);
            if !v.is_finite() {
                continue;
            }
            let s = fmt_g(v, 17);
            let back: f64 = s.parse().unwrap();
            assert!(
                back == v || (v == 0.0 && back == 0.0),
                "{v:e} formatted as {s} parsed back to {back:e}"
            );
        }
    }

    #[test]
    fn json_escaping_handles_specials() {
        assert_eq!(escape_json("plain"), "plain");
        assert_eq!(escape_json("a\"b\\c"), "a\\\"b\\\\c");
        assert_eq!(escape_json("line\nbreak\ttab"), "line\\nbreak\\ttab");
        assert_eq!(escape_json("\u{1}"), "\\u0001");
        assert_eq!(escape_json("höhe"), "höhe");
    }
}

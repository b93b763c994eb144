//! File formats, synthetic data generation and missingness utilities.
//!
//! | artifact | format |
//! |----------|--------|
//! | network  | JSON: `nodes` (ordered `{name, states, parents}`), optional `cpts` |
//! | dataset  | CSV, header of node names, `?` for a missing cell, `#` comment lines |
//! | bounds   | JSON: `bounds` map from node name to `{min, max}` tables |
//! | trace    | CSV, one row per learning iteration |
//! | summary  | CSV, one row per comparison trial |
//!
//! Probabilities are written with 17 significant digits so every `f64`
//! survives a write/read cycle unchanged.

mod bounds_file;
mod dataset;
mod network;
mod sampling;
mod trace;

pub use bounds_file::{parse_bounds, write_bounds};
pub use dataset::{parse_dataset, write_dataset, Dataset, MISSING_TOKEN};
pub use network::{parse_network, write_network, ParsedNetwork, RENORMALIZE_TOLERANCE};
pub use sampling::{forward_sample, mask_mcar, missingness_rate};
pub use trace::{write_summary, write_trace, SUMMARY_HEADER, TRACE_HEADER};

use crate::error::{Error, Result};

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros
/// dropped, scientific notation outside [1e-5, 1e17).
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if (-5..17).contains(&exp) {
        let body = if exp < 0 {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        } else {
            let split = exp as usize + 1;
            format!("{}.{}", &digits[..split], &digits[split..])
        };
        let body = if body.contains('.') {
            body.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            body
        };
        format!("{sign}{body}")
    } else {
        let frac = digits[1..].trim_end_matches('0');
        let dot = if frac.is_empty() { "" } else { "." };
        format!("{sign}{}{dot}{frac}e{exp}", &digits[..1])
    }
}

/// Node and state labels are restricted to `[A-Za-z0-9_+-]`.
pub fn check_label(label: &str) -> Result<()> {
    if label.is_empty()
        || !label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '-'))
    {
        return Err(Error::Domain(format!(
            "label `{label}` must be nonempty and use only [A-Za-z0-9_+-]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g17_examples() {
        assert_eq!(format_g17(0.5), "0.5");
        assert_eq!(format_g17(1.0), "1");
        assert_eq!(format_g17(0.6), "0.59999999999999998");
        assert_eq!(format_g17(-0.478036), "-0.47803600000000002");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_g17(123.0), "123");
        assert_eq!(format_g17(1e20), "1e20");
        assert_eq!(format_g17(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_g17(0.0), "0");
    }

    #[test]
    fn labels() {
        assert!(check_label("a0").is_ok());
        assert!(check_label("x_+-Y").is_ok());
        assert!(check_label("").is_err());
        assert!(check_label("a b").is_err());
        assert!(check_label("?").is_err());
    }

    proptest! {
        #[test]
        fn g17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_g17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}

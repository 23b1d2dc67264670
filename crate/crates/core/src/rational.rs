//! Exact rational literals.
//!
//! Simulation time, time steps and every numeric literal written in a
//! netlist are kept as exact rationals. Decimal and scientific notation
//! denote rationals too: `0.2` is exactly `1/5`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Parses `12`, `-3/4`, `0.2`, `2e-13`, `1.5E+3` into an exact rational.
///
/// Returns `None` for anything else, including Lisp double-float syntax
/// (`1.0d0`), which is deliberately inexact.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_integer(num)?;
        let den = parse_integer(den)?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    parse_decimal(text)
}

fn parse_integer(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix('+').unwrap_or(text);
    let body = digits.strip_prefix('-').unwrap_or(digits);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = text[pos + 1..].strip_prefix('+').unwrap_or(&text[pos + 1..]).parse().ok()?;
            (&text[..pos], exp)
        }
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exponent.checked_sub(frac_part.len() as i64)?;
    if scale.unsigned_abs() > 100_000 {
        return None;
    }
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    Some(if negative { -value } else { value })
}

/// Nearest double to an exact rational.
pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite double.
pub fn from_f64(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

/// `num/den` text, or just `num` for integers.
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Shortest text that denotes exactly `value`: an integer, `num/den`, or a
/// decimal that round-trips through `parse_rational` when that is shorter.
pub fn format_rational_short(value: &BigRational) -> String {
    let fraction = format_rational(value);
    if value.denom().is_one() {
        return fraction;
    }
    let approx = to_f64(value);
    if approx.is_finite() {
        let text = format!("{approx:?}");
        if text.len() < fraction.len() && parse_rational(&text).as_ref() == Some(value) {
            return text;
        }
    }
    fraction
}

/// True when `value` is strictly positive.
pub fn is_positive(value: &BigRational) -> bool {
    value.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_every_literal_form() {
        assert_eq!(parse_rational("1/5"), Some(ratio(1, 5)));
        assert_eq!(parse_rational("0.2"), Some(ratio(1, 5)));
        assert_eq!(parse_rational("2e-13"), Some(ratio(2, 10_000_000_000_000)));
        assert_eq!(parse_rational("-1.5E+3"), Some(ratio(-1500, 1)));
        assert_eq!(parse_rational(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("7"), Some(ratio(7, 1)));
        assert_eq!(parse_rational("4/-2"), Some(ratio(-2, 1)));
    }

    #[test]
    fn rejects_non_rationals() {
        for text in ["", "1/0", "abc", "1.0d0", "1e", "--1", ".", "1/2/3", "e5"] {
            assert_eq!(parse_rational(text), None, "{text}");
        }
    }

    #[test]
    fn short_format_round_trips() {
        for text in ["1/5", "1/3", "2e-13", "-7", "2.067833848e-15"] {
            let value = parse_rational(text).unwrap();
            let printed = format_rational_short(&value);
            assert_eq!(parse_rational(&printed), Some(value), "{text} -> {printed}");
        }
        assert_eq!(format_rational_short(&ratio(1, 5)), "1/5");
        assert_eq!(format_rational_short(&ratio(1, 3)), "1/3");
        assert_eq!(format_rational_short(&ratio(1, 1_000_000_000_000)), "1e-12");
    }
}

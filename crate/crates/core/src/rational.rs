//! Exact rational helpers: decimal parsing, significant-digit rounding of
//! irrational constants, and the fraction-plus-decimal output format.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Significant digits kept when an irrational constant is materialized.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Parses `[-+]digits[.digits]` exactly. Scientific notation is rejected.
pub fn parse_decimal(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.contains(['e', 'E']) {
        return Err(Error::Parse(format!(
            "scientific notation is not accepted: `{text}`"
        )));
    }
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, fraction) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if (whole.is_empty() && fraction.is_empty()) || !digits_ok(whole) || !digits_ok(fraction) {
        return Err(Error::Parse(format!("not a decimal number: `{text}`")));
    }
    let mut numer = BigInt::zero();
    for b in whole.bytes().chain(fraction.bytes()) {
        numer = numer * 10 + BigInt::from(b - b'0');
    }
    let mut value = Rational::new(numer, pow10(fraction.len() as u32));
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Rounds a finite float to `digits` significant decimal digits and returns
/// the exact rational value of the rounded decimal.
pub fn round_sig(x: f64, digits: usize) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidParams(format!("cannot round non-finite value {x}")));
    }
    if x == 0.0 {
        return Ok(Rational::zero());
    }
    let text = format!("{:.*e}", digits.max(1) - 1, x);
    let (mantissa, exponent) = text
        .split_once('e')
        .ok_or_else(|| Error::Parse(format!("unexpected float format `{text}`")))?;
    let mantissa = parse_decimal(mantissa)?;
    let exponent: i32 = exponent
        .parse()
        .map_err(|_| Error::Parse(format!("unexpected float exponent `{text}`")))?;
    let scale = Rational::from_integer(pow10(exponent.unsigned_abs()));
    Ok(if exponent >= 0 {
        mantissa * scale
    } else {
        mantissa / scale
    })
}

/// `round_sig` at the crate-wide precision.
pub fn round12(x: f64) -> Result<Rational> {
    round_sig(x, SIGNIFICANT_DIGITS)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root when numerator and denominator are perfect squares.
pub fn sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// `7`, `-3/4`.
pub fn format_exact(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering rounded half away from zero, computed exactly.
pub fn format_decimal(r: &Rational, places: u32) -> String {
    let scaled = (r * Rational::from_integer(pow10(places))).round();
    let value = scaled.to_integer();
    let negative = value.is_negative();
    let (q, rem) = value.abs().div_rem(&pow10(places));
    let sign = if negative { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{q}");
    }
    format!("{sign}{q}.{:0>width$}", rem.to_string(), width = places as usize)
}

/// Exact decimal rendering; `None` when the expansion does not terminate.
pub fn format_decimal_exact(r: &Rational) -> Option<String> {
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return None;
    }
    Some(format_decimal(r, twos.max(fives)))
}

/// The report format: exact fraction followed by a six-place decimal.
pub fn format_both(r: &Rational) -> String {
    format!("{} ({})", format_exact(r), format_decimal(r, 6))
}

/// Least common multiple of the denominators, used for fixed-point scans.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_decimals() {
        assert_eq!(parse_decimal("36").unwrap(), int(36));
        assert_eq!(parse_decimal("-0.25").unwrap(), frac(-1, 4));
        assert_eq!(parse_decimal(".5").unwrap(), frac(1, 2));
        assert_eq!(parse_decimal("7.").unwrap(), int(7));
    }

    #[test]
    fn rejects_scientific_and_garbage() {
        assert!(parse_decimal("1e3").is_err());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("-").is_err());
        assert!(parse_decimal("1/2").is_err());
    }

    #[test]
    fn rounds_to_significant_digits() {
        let r = round12(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert_eq!(r, parse_decimal("0.707106781187").unwrap());
        let big = round_sig(123456.789, 4).unwrap();
        assert_eq!(big, int(123500));
        let small = round_sig(0.000123456, 3).unwrap();
        assert_eq!(small, parse_decimal("0.000123").unwrap());
    }

    #[test]
    fn formats_exact_and_decimal() {
        assert_eq!(format_exact(&frac(11, 10)), "11/10");
        assert_eq!(format_exact(&int(-2)), "-2");
        assert_eq!(format_decimal(&frac(2, 3), 6), "0.666667");
        assert_eq!(format_decimal(&frac(-1, 8), 2), "-0.13");
        assert_eq!(format_both(&frac(9, 5)), "9/5 (1.800000)");
    }

    #[test]
    fn exact_square_roots() {
        assert_eq!(sqrt_exact(&int(16)), Some(int(4)));
        assert_eq!(sqrt_exact(&frac(1, 9)), Some(frac(1, 3)));
        assert_eq!(sqrt_exact(&int(2)), None);
    }
}

//! Exact rational coefficients.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses an unsigned decimal literal (`13`, `0.26`, `.5`, `2.`) exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (whole, frac) = match text.split_once('.') {
        Some((w, f)) => (w, f),
        None => (text, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(num, den))
}

/// Converts an `f64` to the exact rational it denotes.
pub fn from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // very large numerator/denominator: go through logarithm-free scaling
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats a non-negative rational in the DSL literal syntax: a terminating
/// decimal when one exists, otherwise `p/q`.
pub fn format_abs(r: &Rational) -> String {
    let r = r.abs();
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.to_integer().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (w, f) = digits.split_at(digits.len() - places);
    format!("{w}.{f}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("0.26").unwrap(), ratio(13, 50));
        assert_eq!(parse_decimal("10").unwrap(), int(10));
        assert_eq!(parse_decimal(".5").unwrap(), ratio(1, 2));
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal(".").is_none());
    }

    #[test]
    fn formatting_round_trips() {
        for r in [ratio(13, 50), ratio(1, 3), int(7), ratio(1, 1000), ratio(5, 4)] {
            let text = format_abs(&r);
            let back = match text.split_once('/') {
                Some((n, d)) => Rational::new(n.parse().unwrap(), d.parse().unwrap()),
                None => parse_decimal(&text).unwrap(),
            };
            assert_eq!(back, r, "{text}");
        }
        assert_eq!(format_abs(&ratio(1, 100)), "0.01");
    }
}

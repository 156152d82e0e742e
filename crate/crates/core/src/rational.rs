//! Exact rational helpers shared by every module.
//!
//! All rationals that leave the library (JSON reports, CLI output) are
//! rendered as `"p/q"` strings, never as floats.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {text:?}: {reason}")]
pub struct RationalParseError {
    pub text: String,
    pub reason: &'static str,
}

fn bad(text: &str, reason: &'static str) -> RationalParseError {
    RationalParseError {
        text: text.to_owned(),
        reason,
    }
}

/// Parses `p/q`, a signed integer, or a decimal literal such as `1.25` or
/// `3e-2`. Decimals are converted exactly.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(bad(text, "empty"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_integer(num.trim()).ok_or_else(|| bad(text, "bad numerator"))?;
        let d = parse_integer(den.trim()).ok_or_else(|| bad(text, "bad denominator"))?;
        if d.is_zero() {
            return Err(bad(text, "zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(s).ok_or_else(|| bad(text, "not a number"))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

// Exponents beyond this are rejected rather than materialized as huge integers.
const MAX_DECIMAL_EXPONENT: i64 = 4096;

fn parse_decimal(s: &str) -> Option<Rational> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => {
            let exp_text = &body[i + 1..];
            let digits = exp_text.strip_prefix(['-', '+']).unwrap_or(exp_text);
            if digits.is_empty() || digits.len() > 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            (&body[..i], exp_text.parse::<i64>().ok()?)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: String = [int_part, frac_part].concat();
    let mut numer: BigInt = digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.abs() > MAX_DECIMAL_EXPONENT {
        return None;
    }
    let ten_pow = num_traits::pow(BigInt::from(10u32), scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        Rational::from_integer(numer * ten_pow)
    } else {
        Rational::new(numer, ten_pow)
    })
}

/// `p/q` form; integers keep the `/1` so the format is uniform.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Exact decimal expansion when the denominator has only factors 2 and 5.
pub fn to_exact_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
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
        return None;
    }
    let places = twos.max(fives);
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10u32), places));
    debug_assert!(scaled.is_integer());
    let magnitude = scaled.to_integer().abs().to_string();
    let sign = if r.is_negative() { "-" } else { "" };
    if places == 0 {
        return Some(format!("{sign}{magnitude}"));
    }
    let padded = format!("{magnitude:0>width$}", width = places + 1);
    let (int_digits, frac_digits) = padded.split_at(padded.len() - places);
    Some(format!("{sign}{int_digits}.{frac_digits}"))
}

/// The exact value of a finite double.
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Largest double that does not exceed `r`.
pub fn to_f64_floor(r: &Rational) -> f64 {
    let approx = r.to_f64().unwrap_or(f64::NAN);
    if !approx.is_finite() {
        return approx;
    }
    let mut x = approx;
    // to_f64 is within an ulp or two; walk down until we are below.
    while Rational::from_float(x).is_some_and(|v| &v > r) {
        x = next_down(x);
    }
    x
}

pub fn next_down(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return x;
    }
    if x == 0.0 {
        return -f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits - 1)
    } else {
        f64::from_bits(bits + 1)
    }
}

pub fn next_up(x: f64) -> f64 {
    -next_down(-x)
}

/// Decomposes a finite nonnegative double into `mantissa * 2^exponent`.
pub fn f64_parts(x: f64) -> (u64, i32) {
    debug_assert!(x.is_finite() && x >= 0.0);
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), biased - 1075)
    }
}

/// `x * 2^exp` without intermediate overflow or underflow in the scale factor.
pub fn ldexp(mut x: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        x *= f64::from_bits(((1023 + 1000) as u64) << 52);
        exp -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while exp < -1000 {
        x *= f64::from_bits(((1023 - 1000) as u64) << 52);
        exp += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * f64::from_bits(((1023 + exp) as u64) << 52)
}

/// Monotone (non-strict) conversion of a nonnegative integer to f64 via its
/// top 64 bits. Returns `(mantissa_as_f64, binary_exponent)`.
pub fn big_to_f64_parts(n: &BigInt) -> (f64, i64) {
    debug_assert!(n.sign() != Sign::Minus);
    let bits = n.bits();
    if bits <= 64 {
        return (n.to_u64().unwrap_or(0) as f64, 0);
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    (top.to_u64().unwrap_or(u64::MAX) as f64, shift as i64)
}

/// Serde adapter: a rational as a `"p/q"` string.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = v.iter().map(format_rational).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: a finite double as the exact `"p/q"` it represents.
pub mod serde_f64_exact {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        let r = from_f64_exact(*x).ok_or_else(|| serde::ser::Error::custom("non-finite value"))?;
        s.serialize_str(&format_rational(&r))
    }
}

/// Serde adapter for `Vec<f64>` as exact `"p/q"` strings.
pub mod serde_f64_exact_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let strings = v
            .iter()
            .map(|x| from_f64_exact(*x).map(|r| format_rational(&r)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| serde::ser::Error::custom("non-finite value"))?;
        strings.serialize(s)
    }
}

/// Display wrapper for `p/q` formatting.
pub struct Pq<'a>(pub &'a Rational);

impl fmt::Display for Pq<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-6/4").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational("1.2").unwrap(), rat(6, 5));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("3e-2").unwrap(), rat(3, 100));
        assert_eq!(parse_rational("2E3").unwrap(), int(2000));
        assert_eq!(parse_rational("7").unwrap(), int(7));
    }

    #[test]
    fn rejects_garbage() {
        for t in ["", "1/0", "a", "1.2.3", "1e", ".", "--1", "1/x", "1e9999999"] {
            assert!(parse_rational(t).is_err(), "{t}");
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_exact_decimal(&rat(6, 5)).unwrap(), "1.2");
        assert_eq!(to_exact_decimal(&rat(-1, 8)).unwrap(), "-0.125");
        assert_eq!(to_exact_decimal(&int(3)).unwrap(), "3");
        assert_eq!(to_exact_decimal(&rat(1, 3)), None);
        assert_eq!(format_rational(&int(1)), "1/1");
    }

    #[test]
    fn floor_conversion_never_exceeds() {
        for (n, d) in [(1, 3), (2, 3), (1, 10), (355, 113), (1, 7)] {
            let r = rat(n, d);
            let x = to_f64_floor(&r);
            assert!(Rational::from_float(x).unwrap() <= r);
            assert!(Rational::from_float(next_up(x)).unwrap() > r);
        }
    }

    #[test]
    fn f64_parts_reassemble() {
        for x in [0.0, 1.0, 0.1, 1.2, 5e-324, 1e300, 3.0 / 1024.0] {
            let (m, e) = f64_parts(x);
            assert_eq!(ldexp(m as f64, e as i64), x);
        }
    }
}

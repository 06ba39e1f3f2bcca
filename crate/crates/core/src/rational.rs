//! Exact rational helpers.
//!
//! Lattice-level quantities (Gram entries, squared radii, offsets) are small in
//! number and carried as [`BigRational`]; hot loops work on integers derived
//! from them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, `"p"`, or a plain decimal such as `"0.25"` / `"1e8"`.
/// Decimals are converted exactly from their written digits, not through `f64`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::parse("empty rational"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| Error::parse(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q.trim().parse().map_err(|_| Error::parse(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::parse(format!("not a rational or decimal: {s:?}"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{whole}{frac}0").parse().map_err(|_| bad())?;
    let digits = digits / BigInt::from(10);
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(digits);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// `"p/q"` in lowest terms, or `"p"` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::precondition(format!("non-finite value {x}")))
}

pub fn floor_i128(r: &Rational) -> Result<i128> {
    r.floor().to_integer().to_i128().ok_or(Error::Overflow("rational floor"))
}

pub fn ceil_i128(r: &Rational) -> Result<i128> {
    r.ceil().to_integer().to_i128().ok_or(Error::Overflow("rational ceil"))
}

pub fn to_i64(n: &BigInt) -> Result<i64> {
    n.to_i64().ok_or(Error::Overflow("integer conversion"))
}

/// Exact test of `q <= (sqrt(a) - sqrt(b))^2` for nonnegative `a`, `b`.
///
/// A negative radius `sqrt(a) - sqrt(b) < 0` describes an empty ball and the
/// test fails for every `q`.
pub fn le_sq_root_diff(q: &Rational, a: &Rational, b: &Rational) -> bool {
    if a < b {
        return false;
    }
    // (sqrt a - sqrt b)^2 = a + b - 2 sqrt(ab)
    let t = a + b - q;
    if t.is_negative() {
        return false;
    }
    let four_ab = Rational::from_integer(BigInt::from(4)) * a * b;
    four_ab <= &t * &t
}

/// Largest integer `N >= 0` with `N * unit <= (sqrt(a) - sqrt(b))^2`, or `None`
/// when the radius `sqrt(a) - sqrt(b)` is negative.
pub fn floor_sq_root_diff_over(a: &Rational, b: &Rational, unit: &Rational) -> Result<Option<i128>> {
    if a < b {
        return Ok(None);
    }
    if !unit.is_positive() {
        return Err(Error::precondition("unit must be positive"));
    }
    let approx = ((to_f64(a).sqrt() - to_f64(b).sqrt()).powi(2) / to_f64(unit)).floor();
    let mut n: i128 = if approx.is_finite() && approx > 0.0 { approx as i128 } else { 0 };
    let holds = |n: i128| le_sq_root_diff(&(unit * Rational::from_integer(BigInt::from(n))), a, b);
    while n > 0 && !holds(n) {
        n -= 1;
    }
    while holds(n + 1) {
        n += 1;
    }
    Ok(Some(n))
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Integer square root (floor) of a nonnegative `u128`.
pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let sq_le = |x: u128| x.checked_mul(x).is_some_and(|s| s <= n);
    let mut x = ((n as f64).sqrt() as u128).min(u64::MAX as u128);
    while !sq_le(x) {
        x -= 1;
    }
    while sq_le(x + 1) {
        x += 1;
    }
    x
}

/// Serde adapter: a rational serialized as a `"p/q"` string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Rational);

impl fmt::Debug for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Display for RatStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
            F(f64),
        }
        let r = match Raw::deserialize(d)? {
            Raw::S(s) => parse_rational(&s).map_err(serde::de::Error::custom)?,
            Raw::I(i) => int(i),
            Raw::F(x) => from_f64(x).map_err(serde::de::Error::custom)?,
        };
        Ok(RatStr(r))
    }
}

impl From<Rational> for RatStr {
    fn from(r: Rational) -> Self {
        RatStr(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("1e8").unwrap(), int(100_000_000));
        assert_eq!(parse_rational("2.5e-1").unwrap(), rat(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&rat(6, 4)), "3/2");
        assert_eq!(format_rational(&rat(8, 4)), "2");
    }

    #[test]
    fn root_difference_comparison() {
        // (sqrt 36 - sqrt 2)^2 = 38 - 12 sqrt 2 = 21.029...
        let a = int(36);
        let b = int(2);
        assert!(le_sq_root_diff(&int(21), &a, &b));
        assert!(!le_sq_root_diff(&int(22), &a, &b));
        assert_eq!(floor_sq_root_diff_over(&a, &b, &int(1)).unwrap(), Some(21));
        assert_eq!(floor_sq_root_diff_over(&b, &a, &int(1)).unwrap(), None);
        // exact square: (3 - 1)^2 = 4
        assert!(le_sq_root_diff(&int(4), &int(9), &int(1)));
        assert!(!le_sq_root_diff(&rat(40001, 10000), &int(9), &int(1)));
    }

    #[test]
    fn isqrt_edges() {
        for n in 0u128..2000 {
            let r = isqrt_u128(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt_u128(u64::MAX as u128 * u64::MAX as u128), u64::MAX as u128);
    }
}

//! Helpers around [`Rat`]: exact decimal parsing, rendering and serde adapters.
//!
//! Rationals are serialized as `"p/q"` strings (or `"p"` when integral) so that JSON
//! logs and results stay exact and readable.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a rational number: {0:?}")]
pub struct ParseRatError(pub String);

/// Build a rational from an integer.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Build `n/d`. Panics when `d == 0`.
pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parse an exact rational from `p/q`, an integer, or a decimal literal with an
/// optional exponent (`-1.25e-3`). Decimal literals are read exactly, never
/// through a float.
pub fn parse_rat(text: &str) -> Result<Rat, ParseRatError> {
    let t = text.trim();
    let err = || ParseRatError(text.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rat(n).map_err(|_| err())?;
        let d = parse_rat(d).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = t[pos + 1..].parse().map_err(|_| err())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    if exponent.unsigned_abs() > 100_000 {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rat::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// `p/q` or `p` when the denominator is one.
pub fn to_text(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `places` digits after the point, truncated toward zero.
pub fn to_decimal(r: &Rat, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = (r.numer().abs() * &scale) / r.denom();
    let (int_part, frac_part) = scaled.div_rem(&scale);
    let mut out = String::new();
    if r.is_negative() && !scaled.is_zero() {
        out.push('-');
    }
    let _ = write!(out, "{int_part}");
    if places > 0 {
        let digits = frac_part.to_string();
        out.push('.');
        for _ in digits.len()..places {
            out.push('0');
        }
        out.push_str(&digits);
    }
    out
}

/// Lossy conversion for display and float evaluation.
pub fn to_f64(r: &Rat) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: &BigInt) -> u64 {
    assert!(n.sign() == Sign::Plus, "ceil_log2 of a non-positive number");
    if n.is_one() {
        0
    } else {
        (n - BigInt::one()).bits()
    }
}

/// Serde adapter for a [`Rat`] field.
pub mod serde_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_text(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for an `Option<Rat>` field (`null` for `None`).
pub mod serde_opt_rat {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&to_text(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| parse_rat(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rat("0.001").unwrap(), frac(1, 1000));
        assert_eq!(parse_rat("-1.25e-3").unwrap(), frac(-1, 800));
        assert_eq!(parse_rat("2E2").unwrap(), int(200));
        assert_eq!(parse_rat(".5").unwrap(), frac(1, 2));
        assert_eq!(parse_rat("7/21").unwrap(), frac(1, 3));
        assert_eq!(parse_rat("+3").unwrap(), int(3));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("-").is_err());
    }

    #[test]
    fn decimal_rendering_truncates() {
        assert_eq!(to_decimal(&frac(1, 3), 6), "0.333333");
        assert_eq!(to_decimal(&frac(-2, 3), 3), "-0.666");
        assert_eq!(to_decimal(&int(6), 2), "6.00");
        assert_eq!(to_decimal(&frac(-1, 10000), 3), "0.000");
        assert_eq!(to_decimal(&frac(12345, 100), 0), "123");
    }

    #[test]
    fn ceil_log2_small_values() {
        let expected = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (7, 3), (8, 3), (9, 4), (20000, 15), (20001, 15)];
        for (n, want) in expected {
            assert_eq!(ceil_log2(&BigInt::from(n)), want, "n = {n}");
        }
    }
}

//! Exact rational helpers: the `Q` alias, "p/q" parsing and formatting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{BsurfError, Result};

/// Exact rational number used throughout the crate.
pub type Q = BigRational;

/// Builds `n/d` (panics if `d == 0`).
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `base^exp` for a possibly negative exponent.
pub fn qpow(base: i64, exp: i64) -> Q {
    let b = qi(base);
    if exp >= 0 {
        num_traits::pow(b, exp as usize)
    } else {
        num_traits::pow(b, (-exp) as usize).recip()
    }
}

/// Parses `"p/q"`, `"p"`, or a finite decimal `"0.125"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    if t.is_empty() {
        return Err(BsurfError::Parse("empty rational".into()));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| BsurfError::Parse(format!("bad numerator in {t:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| BsurfError::Parse(format!("bad denominator in {t:?}")))?;
        if d.is_zero() {
            return Err(BsurfError::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let neg = ip.starts_with('-');
        let digits = format!("{}{}", ip.trim_start_matches(['-', '+']), fp);
        let n: BigInt = digits
            .parse()
            .map_err(|_| BsurfError::Parse(format!("bad decimal {t:?}")))?;
        let d = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(n, d);
        return Ok(if neg { -v } else { v });
    }
    let n: BigInt = t
        .parse()
        .map_err(|_| BsurfError::Parse(format!("bad rational {t:?}")))?;
    Ok(Q::from_integer(n))
}

/// Parses a comma-separated list of rationals.
pub fn parse_q_list(s: &str) -> Result<Vec<Q>> {
    s.split(',').map(parse_q).collect()
}

/// Canonical text form: `"p/q"`, or `"p"` for integers.
pub fn fmt_q(x: &Q) -> String {
    x.to_string()
}

/// Comma-separated canonical forms.
pub fn fmt_q_list(xs: &[Q]) -> String {
    xs.iter().map(fmt_q).collect::<Vec<_>>().join(",")
}

/// Float approximation for display-only columns.
pub fn approx(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Sum of a slice.
pub fn sum(xs: &[Q]) -> Q {
    xs.iter().fold(Q::zero(), |a, b| a + b)
}

/// Sum of absolute values.
pub fn l1(xs: &[Q]) -> Q {
    xs.iter().fold(Q::zero(), |a, b| a + b.abs())
}

/// Inner product of two equal-length vectors.
pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Scales every entry by `c`.
pub fn scale(xs: &[Q], c: &Q) -> Vec<Q> {
    xs.iter().map(|x| x * c).collect()
}

/// `1` as a rational.
pub fn one() -> Q {
    Q::one()
}

/// Serde adapter storing a rational as its "p/q" string.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a rational vector as a list of "p/q" strings.
pub mod serde_qvec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        x.iter().map(fmt_q).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_q(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("1/2").unwrap(), q(1, 2));
        assert_eq!(parse_q("-3").unwrap(), qi(-3));
        assert_eq!(parse_q("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_q("-0.5").unwrap(), q(-1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn format_round_trip() {
        for s in ["1/2", "-7/3", "5", "0"] {
            assert_eq!(fmt_q(&parse_q(s).unwrap()), s);
        }
        assert_eq!(qpow(2, -3), q(1, 8));
    }
}

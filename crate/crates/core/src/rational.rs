//! Exact rational scalars and their `num/den` text form.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational used for every probability and payoff in the crate.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational {:?} (expected `num/den` or an integer)", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"3/5"`, `"-2"`, `" 7 / 3 "`. A zero denominator is rejected.
pub fn parse_q(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: BigInt = n.parse().map_err(|_| err())?;
    let den: BigInt = d.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Q::new(num, den))
}

/// Integers print bare, everything else as reduced `num/den`.
pub fn fmt_q(v: &Q) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn fmt_vec(v: &[Q]) -> String {
    v.iter().map(fmt_q).collect::<Vec<_>>().join(",")
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(v: &Q) -> Q {
    v.abs()
}

pub fn sum<'a>(it: impl IntoIterator<Item = &'a Q>) -> Q {
    it.into_iter().fold(Q::zero(), |acc, v| acc + v)
}

pub fn is_one(v: &Q) -> bool {
    v.is_one()
}

/// Serde adapter: a rational as a `num/den` string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatStr(pub Q);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => parse_q(&s).map(RatStr).map_err(serde::de::Error::custom),
            Raw::Int(i) => Ok(RatStr(qi(i))),
        }
    }
}

pub fn to_strs(v: &[Q]) -> Vec<RatStr> {
    v.iter().cloned().map(RatStr).collect()
}

pub fn from_strs(v: &[RatStr]) -> Vec<Q> {
    v.iter().map(|r| r.0.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("3/5").unwrap(), q(3, 5));
        assert_eq!(parse_q(" -6 / 10 ").unwrap(), q(-3, 5));
        assert_eq!(parse_q("4").unwrap(), qi(4));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("0.5").is_err());
        assert_eq!(fmt_q(&q(6, 10)), "3/5");
        assert_eq!(fmt_q(&q(-4, 2)), "-2");
        assert_eq!(fmt_vec(&[q(1, 5), qi(0), qi(1)]), "1/5,0,1");
    }

    #[test]
    fn serde_accepts_ints_and_strings() {
        let v: Vec<RatStr> = serde_json::from_str(r#"["1/3", 2, "-7"]"#).unwrap();
        assert_eq!(from_strs(&v), vec![q(1, 3), qi(2), qi(-7)]);
        assert_eq!(serde_json::to_string(&to_strs(&[q(1, 3)])).unwrap(), r#"["1/3"]"#);
    }
}

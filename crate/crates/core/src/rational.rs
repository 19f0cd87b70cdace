//! Exact rational helpers: `p/q` text round-tripping and the JSON
//! `{"num", "den"}` representation used by report files.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parses `"p"` or `"p/q"` into a normalized rational. Floats are rejected.
pub fn parse_ratio(text: &str) -> Result<Rational64> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text, "1"),
    };
    let num: i64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational numerator in {text:?}")))?;
    let den: i64 = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational denominator in {text:?}")))?;
    if den == 0 {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(Rational64::new(num, den))
}

/// Formats a rational as `p` or `p/q` (normalized, never a float).
pub fn format_ratio(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Wire form of a rational: `{"num": p, "den": q}`, always normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioRepr {
    pub num: i64,
    pub den: i64,
}

impl From<Rational64> for RatioRepr {
    fn from(r: Rational64) -> Self {
        RatioRepr {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl TryFrom<RatioRepr> for Rational64 {
    type Error = Error;

    fn try_from(r: RatioRepr) -> Result<Rational64> {
        if r.den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational64::new(r.num, r.den))
    }
}

/// Converts an exact integer count into a rational, guarding the i64 range.
pub fn ratio_from_u64(n: u64, what: &'static str) -> Result<Rational64> {
    let n: i64 = n.try_into().map_err(|_| Error::Overflow(what))?;
    Ok(Rational64::from_integer(n))
}

//! Exact integer and rational helpers.
//!
//! Every quantity in the crate is either a [`BigInt`] or a [`Rational`]
//! (a normalized `BigRational`). On the wire, integers are decimal strings
//! and rationals are `"p/q"` strings, so no host language has to parse a
//! number that overflows its native types.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int_rat(v: &BigInt) -> Rational {
    Rational::from_integer(v.clone())
}

/// Largest integer `<= r`.
pub fn floor(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

pub fn l1(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).sum()
}

pub fn linf(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_default()
}

pub fn gcd_all(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Formats as `"p/q"` (always with an explicit denominator).
pub fn fmt_rat(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `"p/q"`, `"p"` and short decimals like `"0.25"`.
pub fn parse_rat(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let w = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let f = BigInt::from_str(frac).map_err(|_| bad())?;
        let f = if neg { -f } else { f };
        return Ok(Rational::new(w * &scale + f, scale));
    }
    Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?))
}

pub fn parse_int(s: &str) -> Result<BigInt> {
    BigInt::from_str(s.trim()).map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
}

/// Decimal rendering truncated toward negative infinity to `digits` places.
pub fn decimal_floor(r: &Rational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = floor(&(r * Rational::from_integer(scale.clone())));
    let sign = if scaled.is_negative() { "-" } else { "" };
    let (q, rem) = scaled.abs().div_mod_floor(&scale);
    if digits == 0 {
        return format!("{sign}{q}");
    }
    let frac = format!("{:0>width$}", rem.to_string(), width = digits as usize);
    format!("{sign}{q}.{frac}")
}

/// Lossy view for human-facing summaries only.
pub fn approx_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Serde adapters: big integers as decimal strings, rationals as `"p/q"`.
pub mod serde_str {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub mod int {
        use super::*;
        pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
            s.serialize_str(&v.to_string())
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
            let s = String::deserialize(d)?;
            parse_int(&s).map_err(de::Error::custom)
        }
    }

    pub mod int_vec {
        use super::*;
        use serde::ser::SerializeSeq;
        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&x.to_string())?;
            }
            seq.end()
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigInt>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse_int(s).map_err(de::Error::custom)).collect()
        }
    }

    pub mod rat {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
            s.serialize_str(&fmt_rat(v))
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
            let s = String::deserialize(d)?;
            parse_rat(&s).map_err(de::Error::custom)
        }
    }

    pub mod rat_vec {
        use super::*;
        use serde::ser::SerializeSeq;
        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&fmt_rat(x))?;
            }
            seq.end()
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse_rat(s).map_err(de::Error::custom)).collect()
        }
    }

    pub mod opt_rat {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(r) => s.serialize_some(&fmt_rat(r)),
                None => s.serialize_none(),
            }
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Rational>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse_rat(&s).map_err(de::Error::custom)).transpose()
        }
    }

    pub mod opt_int {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(x) => s.serialize_some(&x.to_string()),
                None => s.serialize_none(),
            }
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<BigInt>, D::Error> {
            let v = Option::<String>::deserialize(d)?;
            v.map(|s| parse_int(&s).map_err(de::Error::custom)).transpose()
        }
    }

    pub mod opt_int_vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<Vec<BigInt>>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(x) => s.serialize_some(&x.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<BigInt>>, D::Error> {
            let v = Option::<Vec<String>>::deserialize(d)?;
            v.map(|xs| xs.iter().map(|s| parse_int(s).map_err(de::Error::custom)).collect()).transpose()
        }
    }

    pub mod opt_rat_vec {
        use super::*;
        pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(x) => s.serialize_some(&x.iter().map(fmt_rat).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Rational>>, D::Error> {
            let v = Option::<Vec<String>>::deserialize(d)?;
            v.map(|xs| xs.iter().map(|s| parse_rat(s).map_err(de::Error::custom)).collect()).transpose()
        }
    }
}

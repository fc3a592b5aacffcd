//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};

use crate::error::{Error, Result};

pub use num_rational::BigRational as Rational;

/// `n/d` as an exact rational. Panics if `d == 0`.
pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p"` or `"p/q"`. The result is always reduced.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidRational(s.to_string());
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// `"p"` when the denominator is one, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn sgn(r: &Rational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub fn pow(r: &Rational, n: u32) -> Rational {
    Pow::pow(r.clone(), n)
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Whether `r^q <= 2^p` for a positive rational `r`.
fn pow_le_pow2(r: &Rational, q_exp: u32, p_exp: i64) -> bool {
    let lhs = pow(r, q_exp);
    let two = int(2);
    let rhs = if p_exp >= 0 {
        pow(&two, p_exp as u32)
    } else {
        pow(&two, (-p_exp) as u32).recip()
    };
    lhs <= rhs
}

fn exponent_parts(eps: &Rational) -> Result<(i64, u32)> {
    let p: i64 = eps
        .numer()
        .try_into()
        .map_err(|_| Error::Precondition(format!("exponent {eps} is too large")))?;
    let q_exp: u32 = eps
        .denom()
        .try_into()
        .map_err(|_| Error::Precondition(format!("exponent {eps} is too large")))?;
    Ok((p, q_exp))
}

/// Whether `w` lies in the closed interval between `2^-eps * f` and `2^eps * f`.
///
/// Decided exactly by comparing `(w/f)^q` against `2^p` for `eps = p/q`.
/// When `f == 0` only `w == 0` qualifies.
pub fn within_pow2(w: &Rational, f: &Rational, eps: &Rational) -> Result<bool> {
    if eps.is_negative() {
        return Err(Error::Precondition("negative tolerance exponent".into()));
    }
    if f.is_zero() || w.is_zero() {
        return Ok(f.is_zero() && w.is_zero());
    }
    if sgn(w) != sgn(f) {
        return Ok(false);
    }
    let ratio = w / f;
    let (p, q_exp) = exponent_parts(eps)?;
    Ok(pow_le_pow2(&ratio, q_exp, p) && pow_le_pow2(&ratio.recip(), q_exp, p))
}

/// A rational `c` with `2^delta - 2^-bits < c <= 2^delta`, for `delta >= 0`.
pub fn pow2_lower(delta: &Rational, bits: u32) -> Result<Rational> {
    if delta.is_negative() {
        return Err(Error::Precondition("negative exponent".into()));
    }
    let (p, q_exp) = exponent_parts(delta)?;
    let whole = delta.floor().to_integer();
    let whole: u32 = (&whole)
        .try_into()
        .map_err(|_| Error::Precondition(format!("exponent {delta} is too large")))?;
    let mut lo = pow(&int(2), whole);
    let mut hi = &lo * int(2);
    let eps = pow(&int(2), bits).recip();
    while &hi - &lo > eps {
        let mid = (&lo + &hi) / int(2);
        if pow_le_pow2(&mid, q_exp, p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub(crate) mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Raw {
        Str(String),
        Int(i64),
    }

    impl Raw {
        pub(crate) fn into_rational<E: de::Error>(self) -> Result<Rational, E> {
            match self {
                Raw::Str(s) => parse_rational(&s).map_err(E::custom),
                Raw::Int(n) => Ok(super::int(n)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        Raw::deserialize(d)?.into_rational()
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<Raw>::deserialize(d)?
                .into_iter()
                .map(Raw::into_rational)
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        assert_eq!(parse_rational("6/4").unwrap(), q(3, 2));
        assert_eq!(format_rational(&q(3, 2)), "3/2");
        assert_eq!(format_rational(&q(-4, 2)), "-2");
        assert_eq!(parse_rational(" -7 ").unwrap(), int(-7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn pow2_interval_is_exact() {
        let eps = q(1, 4);
        // 2^(1/4) is about 1.1892.
        assert!(within_pow2(&q(118, 100), &int(1), &eps).unwrap());
        assert!(!within_pow2(&q(120, 100), &int(1), &eps).unwrap());
        assert!(within_pow2(&q(-85, 100), &int(-1), &eps).unwrap());
        assert!(!within_pow2(&q(-83, 100), &int(-1), &eps).unwrap());
        assert!(!within_pow2(&int(1), &int(-1), &eps).unwrap());
        assert!(within_pow2(&int(0), &int(0), &eps).unwrap());
        assert!(!within_pow2(&q(1, 1000), &int(0), &eps).unwrap());
    }

    #[test]
    fn pow2_lower_brackets() {
        let d = q(1, 8);
        let c = pow2_lower(&d, 40).unwrap();
        assert!(within_pow2(&c, &int(1), &d).unwrap());
        assert!(!within_pow2(&(&c + pow(&int(2), 30).recip()), &int(1), &d).unwrap());
        assert_eq!(pow2_lower(&int(0), 10).unwrap(), int(1));
    }
}

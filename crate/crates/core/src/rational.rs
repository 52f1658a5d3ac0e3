//! Exact rational scalars and their text forms.
//!
//! Polytope algebra runs entirely on [`Rational`]. Real-valued quantities
//! (logarithms of SNRs, entropies) enter through [`rationalize`], which rounds
//! to the dyadic grid with denominator `2^40`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Binary digits kept when a real value is rounded into polytope algebra.
pub const RATIONALIZE_BITS: u32 = 40;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Round `x` to the nearest multiple of `2^-40`.
///
/// Non-finite inputs are a programming error upstream and panic.
pub fn rationalize(x: f64) -> Rational {
    assert!(x.is_finite(), "cannot rationalize non-finite value {x}");
    let scale = (1u64 << RATIONALIZE_BITS) as f64;
    let numer = BigInt::from_f64((x * scale).round()).expect("finite value");
    let r = Rational::new(numer, BigInt::from(1u64 << RATIONALIZE_BITS));
    log::debug!(
        "rationalized {x:e} to {} (rounding error {:e})",
        format_fraction(&r),
        to_f64(&r) - x
    );
    r
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators; fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// `"1/3"`, `"-2"`, `"0"`.
pub fn format_fraction(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"p/q"`, an integer, or a finite decimal such as `"0.05"` (exactly).
pub fn parse_fraction(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: `{s}`"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.trim_start().starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn min_of<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Option<Rational> {
    values.into_iter().min().cloned()
}

/// `max(x, 0)`.
pub fn positive_part(x: &Rational) -> Rational {
    if x.is_positive() {
        x.clone()
    } else {
        zero()
    }
}

/// Serde adapter writing a [`Rational`] as its fraction string.
pub mod serde_fraction {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_fraction, parse_fraction, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_fraction(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_fraction(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` as a list of fraction strings.
pub mod serde_fraction_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{format_fraction, parse_fraction, Rational};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = v.iter().map(format_fraction).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let text = Vec::<String>::deserialize(d)?;
        text.iter()
            .map(|t| parse_fraction(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for nested lists of rationals.
pub mod serde_fraction_rows {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{format_fraction, parse_fraction, Rational};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = v.iter().map(|r| r.iter().map(format_fraction).collect()).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let text = Vec::<Vec<String>>::deserialize(d)?;
        text.iter()
            .map(|row| {
                row.iter()
                    .map(|t| parse_fraction(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_round_trip_through_text() {
        for r in [rat(1, 3), rat(-7, 2), int(0), int(12), rat(9, 40)] {
            assert_eq!(parse_fraction(&format_fraction(&r)).unwrap(), r);
        }
    }

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_fraction("0.05").unwrap(), rat(1, 20));
        assert_eq!(parse_fraction("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_fraction(" 3 ").unwrap(), int(3));
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("abc").is_err());
    }

    #[test]
    fn rationalize_lands_on_dyadic_grid() {
        let r = rationalize(0.1);
        assert_eq!(r.denom() % BigInt::from(2), BigInt::zero());
        assert!((to_f64(&r) - 0.1).abs() <= 0.5 / (1u64 << RATIONALIZE_BITS) as f64);
        assert_eq!(rationalize(0.5), rat(1, 2));
        assert_eq!(rationalize(-3.0), int(-3));
    }
}

//! Numeric layer: exact rationals, floats, and the comparison policy.
//!
//! Every distance value in the crate is a [`Scalar`]. Table-backed spaces use
//! [`Rational`] so identities can be asserted with equality; function-backed
//! grids may use `f64` together with a [`NumericPolicy::floating`] tolerance.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number, serialized as a `"num/den"` string (`"n"` when the
/// denominator is one).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(value: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^-k`.
    pub fn dyadic(k: u32) -> Self {
        Rational(BigRational::new(BigInt::one(), BigInt::one() << k))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        match self.0.to_f64() {
            Some(v) => v,
            None => {
                let n = self.0.numer().to_f64().unwrap_or(f64::NAN);
                let d = self.0.denom().to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    /// Exact conversion of a finite float (every finite `f64` is a dyadic rational).
    pub fn from_f64(value: f64) -> Option<Self> {
        BigRational::from_float(value).map(Rational)
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Rational::from_integer(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n`, `n/d` and decimal literals with optional exponent
    /// (`0.25`, `-1.5e-3`). Decimals are converted exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::RationalRequired(s.to_string());
        if s.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            return Ok(Rational(BigRational::new(n, d)));
        }
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = s[i + 1..].parse().map_err(|_| bad())?;
                (&s[..i], e)
            }
            None => (s, 0),
        };
        let (negative, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let all_digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = all_digits.parse().map_err(|_| bad())?;
        if negative {
            numer = -numer;
        }
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Rational(value))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational($trait::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RationalVisitor;

        impl Visitor<'_> for RationalVisitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a \"num/den\" string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
                Ok(Rational::from_integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
                Ok(Rational(BigRational::from_integer(BigInt::from(v))))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Rational, E> {
                // Shortest round-trip text, so 0.1 reads as 1/10 rather than
                // the binary expansion of the nearest double.
                if !v.is_finite() {
                    return Err(E::custom(Error::RationalRequired(v.to_string())));
                }
                format!("{v:e}").parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(RationalVisitor)
    }
}

/// Whether a scalar type carries exact values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericMode {
    ExactRational,
    Floating,
}

/// Value type for distances and potentials.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Serialize
    + for<'de> Deserialize<'de>
{
    const MODE: NumericMode;

    fn zero() -> Self;

    fn ratio(numer: i64, denom: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses a table-document value (JSON number or rational string).
    fn from_json(value: &serde_json::Value) -> Result<Self>;

    fn to_json(&self) -> serde_json::Value;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn abs_diff(&self, other: &Self) -> Self {
        if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    /// Arithmetic mean of a non-empty slice.
    fn mean(values: &[Self]) -> Self {
        let total = values.iter().cloned().fold(Self::zero(), |acc, v| acc + v);
        total * Self::ratio(1, values.len() as i64)
    }
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::ExactRational;

    fn zero() -> Self {
        Rational::zero()
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom)
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::String(s) => s.parse(),
            serde_json::Value::Number(n) => n.to_string().parse(),
            other => Err(Error::RationalRequired(other.to_string())),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }

    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }

    fn is_negative(&self) -> bool {
        Rational::is_negative(self)
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Floating;

    fn zero() -> Self {
        0.0
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        let parsed = match value {
            serde_json::Value::Number(n) => n.as_f64(),
            serde_json::Value::String(s) => match s.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => s.parse::<Rational>().ok().map(|r| r.to_f64()),
            },
            _ => None,
        };
        match parsed {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(Error::InvalidNumber(value.to_string())),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// Comparison semantics for axiom checks and certificates.
///
/// In exact mode every comparison is exact. In floating mode `a <= b` means
/// `a <= b + tolerance`, equality means `|a - b| <= tolerance`, and strict
/// inequalities must hold beyond the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericPolicy {
    pub mode: NumericMode,
    pub tolerance: f64,
}

pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-9;

impl NumericPolicy {
    pub fn exact() -> Self {
        NumericPolicy {
            mode: NumericMode::ExactRational,
            tolerance: 0.0,
        }
    }

    pub fn floating(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "floating tolerance must be a positive finite number, got {tolerance}"
            )));
        }
        Ok(NumericPolicy {
            mode: NumericMode::Floating,
            tolerance,
        })
    }

    /// Default policy for a scalar type: exact for rationals, `1e-9` for floats.
    pub fn default_for<S: Scalar>() -> Self {
        match S::MODE {
            NumericMode::ExactRational => NumericPolicy::exact(),
            NumericMode::Floating => NumericPolicy {
                mode: NumericMode::Floating,
                tolerance: DEFAULT_FLOAT_TOLERANCE,
            },
        }
    }

    /// Exact mode is only meaningful over exact scalars.
    pub fn check_compatible<S: Scalar>(&self) -> Result<()> {
        match (self.mode, S::MODE) {
            (NumericMode::ExactRational, NumericMode::Floating) => Err(Error::InvalidPolicy(
                "exact-rational mode requires rational values".into(),
            )),
            (NumericMode::Floating, _) if !(self.tolerance > 0.0) => Err(Error::InvalidPolicy(
                "floating tolerance must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode == NumericMode::ExactRational
    }

    fn cmp_f64<S: Scalar>(a: &S, b: &S) -> (f64, f64) {
        (a.to_f64(), b.to_f64())
    }

    pub fn le<S: Scalar>(&self, a: &S, b: &S) -> bool {
        match self.mode {
            NumericMode::ExactRational => a <= b,
            NumericMode::Floating => {
                let (a, b) = Self::cmp_f64(a, b);
                a <= b + self.tolerance
            }
        }
    }

    pub fn lt<S: Scalar>(&self, a: &S, b: &S) -> bool {
        match self.mode {
            NumericMode::ExactRational => a < b,
            NumericMode::Floating => {
                let (a, b) = Self::cmp_f64(a, b);
                a + self.tolerance < b
            }
        }
    }

    pub fn eq<S: Scalar>(&self, a: &S, b: &S) -> bool {
        match self.mode {
            NumericMode::ExactRational => a == b,
            NumericMode::Floating => {
                let (a, b) = Self::cmp_f64(a, b);
                (a - b).abs() <= self.tolerance
            }
        }
    }

    pub fn is_zero<S: Scalar>(&self, a: &S) -> bool {
        self.eq(a, &S::zero())
    }

    pub fn is_positive<S: Scalar>(&self, a: &S) -> bool {
        self.lt(&S::zero(), a)
    }

    /// Total order used when picking minima; ties are exact ties.
    pub fn order<S: Scalar>(a: &S, b: &S) -> Ordering {
        a.partial_cmp(b).unwrap_or(Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rational_forms() {
        assert_eq!("3".parse::<Rational>().unwrap(), Rational::from_integer(3));
        assert_eq!("6/4".parse::<Rational>().unwrap(), Rational::new(3, 2));
        assert_eq!("0.25".parse::<Rational>().unwrap(), Rational::new(1, 4));
        assert_eq!(
            "-1.5e-3".parse::<Rational>().unwrap(),
            Rational::new(-3, 2000)
        );
        assert_eq!(
            "2e2".parse::<Rational>().unwrap(),
            Rational::from_integer(200)
        );
        assert!("1/0".parse::<Rational>().is_err());
        assert!("nan".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn json_numbers_read_as_their_decimal_text() {
        let v: serde_json::Value = serde_json::from_str("0.1").unwrap();
        assert_eq!(Rational::from_json(&v).unwrap(), Rational::new(1, 10));
        let r: Rational = serde_json::from_str("0.1").unwrap();
        assert_eq!(r, Rational::new(1, 10));
        let r: Rational = serde_json::from_str("\"7/21\"").unwrap();
        assert_eq!(r, Rational::new(1, 3));
        assert_eq!(
            serde_json::to_string(&Rational::new(1, 3)).unwrap(),
            "\"1/3\""
        );
    }

    #[test]
    fn floating_policy_compares_with_tolerance() {
        let p = NumericPolicy::floating(1e-6).unwrap();
        assert!(p.le(&1.0000005, &1.0));
        assert!(!p.lt(&1.0, &1.0000005));
        assert!(p.eq(&0.0, &1e-7));
        assert!(NumericPolicy::floating(0.0).is_err());
        assert!(NumericPolicy::exact().check_compatible::<f64>().is_err());
        assert!(NumericPolicy::exact()
            .check_compatible::<Rational>()
            .is_ok());
    }

    #[test]
    fn dyadic_and_float_conversion() {
        assert_eq!(Rational::dyadic(3), Rational::new(1, 8));
        assert_eq!(Rational::from_f64(0.375).unwrap(), Rational::new(3, 8));
        assert_eq!(Rational::new(1, 3).to_f64(), 1.0 / 3.0);
    }
}

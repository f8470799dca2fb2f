//! Exact rational scalars and the nonnegative time domain.
//!
//! Everything the engine computes (levels, rates, guards, durations) is an
//! arbitrary-precision rational. There is no floating point anywhere.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// An exact rational number, always kept in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat::from(1)
    }

    /// Builds `numer / denom`. Panics if `denom` is zero.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn min(&self, other: &Rat) -> Rat {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }
}

/// Saturating subtraction on nonnegative quantities: `a - b` when `a >= b`,
/// otherwise zero.
pub fn monus(a: &Rat, b: &Rat) -> Rat {
    if a >= b {
        a - b
    } else {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }
}

impl FromStr for Rat {
    type Err = RatParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(RatParseError::Empty);
        }
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (t, None),
        };
        let valid_int = |x: &str, signed: bool| {
            let digits = if signed {
                x.strip_prefix('-').unwrap_or(x)
            } else {
                x
            };
            !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
        };
        if !valid_int(num, true) {
            return Err(RatParseError::Invalid(s.to_string()));
        }
        let n: BigInt = num.parse().map_err(|_| RatParseError::Invalid(s.to_string()))?;
        let d: BigInt = match den {
            Some(d) if valid_int(d, false) => {
                d.parse().map_err(|_| RatParseError::Invalid(s.to_string()))?
            }
            Some(_) => return Err(RatParseError::Invalid(s.to_string())),
            None => BigInt::from(1),
        };
        if d.is_zero() {
            return Err(RatParseError::ZeroDenominator(s.to_string()));
        }
        Ok(Rat(BigRational::new(n, d)))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl<'a> $tr<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl std::iter::Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;

        impl de::Visitor<'_> for RatVisitor {
            type Value = Rat;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as a string (`p`, `-p`, `p/q`) or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(BigInt::from(v))))
            }
        }

        deserializer.deserialize_any(RatVisitor)
    }
}

/// A point or duration in the nonnegative rational time domain.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(Rat);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("time must be nonnegative, got {0}")]
pub struct NegativeTime(pub Rat);

impl Time {
    pub fn zero() -> Self {
        Time(Rat::zero())
    }

    pub fn new(value: Rat) -> Result<Self, NegativeTime> {
        if value.is_negative() {
            Err(NegativeTime(value))
        } else {
            Ok(Time(value))
        }
    }

    pub fn from_int(n: u32) -> Self {
        Time(Rat::from(i64::from(n)))
    }

    pub fn value(&self) -> &Rat {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl TryFrom<Rat> for Time {
    type Error = NegativeTime;
    fn try_from(value: Rat) -> Result<Self, Self::Error> {
        Time::new(value)
    }
}

impl FromStr for Time {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r: Rat = s.parse().map_err(|e: RatParseError| e.to_string())?;
        Time::new(r).map_err(|e| e.to_string())
    }
}

impl Add for &Time {
    type Output = Time;
    fn add(self, rhs: &Time) -> Time {
        Time(&self.0 + &rhs.0)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = Rat::deserialize(deserializer)?;
        Time::new(r).map_err(de::Error::custom)
    }
}

//! Exact nonnegative rational scalars.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A nonnegative rational number with exact arithmetic and total order.
///
/// Every distance, threshold and spectrum element in the crate is an
/// `ExactValue`. The representation is always in lowest terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactValue(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("value must be nonnegative")]
    Negative,
    #[error("cannot parse `{0}` as a rational a/b")]
    Parse(String),
}

impl ExactValue {
    pub fn zero() -> Self {
        ExactValue(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactValue(BigRational::one())
    }

    pub fn from_integer(n: u64) -> Self {
        ExactValue(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numerator / denominator`, reduced.
    pub fn new(numerator: u64, denominator: u64) -> Result<Self, ValueError> {
        Self::from_big(BigUint::from(numerator), BigUint::from(denominator))
    }

    pub fn from_big(numerator: BigUint, denominator: BigUint) -> Result<Self, ValueError> {
        if denominator.is_zero() {
            return Err(ValueError::ZeroDenominator);
        }
        Ok(ExactValue(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        )))
    }

    /// Shorthand for tests and generators; panics on a zero denominator.
    pub fn ratio(numerator: u64, denominator: u64) -> Self {
        Self::new(numerator, denominator).expect("nonzero denominator")
    }

    /// `base^(-exponent)` for an integer exponent of either sign.
    pub fn power_of_inverse(base: u64, exponent: i64) -> Self {
        let b = BigInt::from(base);
        let p = num_traits::pow(b, exponent.unsigned_abs() as usize);
        if exponent >= 0 {
            ExactValue(BigRational::new(BigInt::one(), p))
        } else {
            ExactValue(BigRational::from_integer(p))
        }
    }

    pub fn numerator(&self) -> BigUint {
        self.0.numer().to_biguint().expect("nonnegative")
    }

    pub fn denominator(&self) -> BigUint {
        self.0.denom().to_biguint().expect("positive")
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn add(&self, other: &Self) -> Self {
        ExactValue(&self.0 + &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        ExactValue(&self.0 * &other.0)
    }

    /// Quotient; `None` when dividing by zero.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            None
        } else {
            Some(ExactValue(&self.0 / &other.0))
        }
    }

    /// `|self - other|`.
    pub fn abs_diff(&self, other: &Self) -> Self {
        ExactValue((&self.0 - &other.0).abs())
    }

    /// `self - other` when nonnegative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let d = &self.0 - &other.0;
        (!d.is_negative()).then_some(ExactValue(d))
    }

    pub fn half(&self) -> Self {
        ExactValue(&self.0 / BigInt::from(2))
    }

    pub fn midpoint(&self, other: &Self) -> Self {
        self.add(other).half()
    }

    pub fn min_of<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max_of<'a>(&'a self, other: &'a Self) -> &'a Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Always `a/b`, including `a/1` for integers. Used by the JSON encoding.
    pub fn to_ratio_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactValue {
    type Err = ValueError;

    /// Accepts `a/b` or a bare integer `a`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ValueError::Parse(s.to_string());
        let parse = |t: &str| -> Result<BigUint, ValueError> {
            if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse::<BigUint>().map_err(|_| bad())
        };
        match s.trim().split_once('/') {
            Some((n, d)) => Self::from_big(parse(n)?, parse(d)?),
            None => Self::from_big(parse(s.trim())?, BigUint::one()),
        }
    }
}

impl Serialize for ExactValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_ratio_string())
    }
}

impl<'de> Deserialize<'de> for ExactValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

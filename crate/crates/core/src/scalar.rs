//! Number types the solver runs on.
//!
//! Exact mode uses [`BigRational`] and compares with `==`. Float mode uses
//! `f64` and treats an envelope as touching its reward when the gap is at
//! most the configured tolerance.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for float-mode hit tests.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    const MODE: Mode;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Hit test for an envelope against the reward it dominates.
    fn touches(&self, reward: &Self, tol: f64) -> bool;

    /// `self > other`, beyond the tolerance in float mode.
    fn exceeds(&self, other: &Self, tol: f64) -> bool;

    /// Equality up to tolerance.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        !self.exceeds(other, tol) && !other.exceeds(self, tol)
    }

    fn exp(&self) -> Option<Self>;

    fn ln(&self) -> Option<Self>;

    /// Value as it appears in JSON reports.
    fn to_json(&self) -> serde_json::Value;

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
}

impl Scalar for BigRational {
    const MODE: Mode = Mode::Exact;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn touches(&self, reward: &Self, _tol: f64) -> bool {
        self == reward
    }

    fn exceeds(&self, other: &Self, _tol: f64) -> bool {
        self > other
    }

    fn exp(&self) -> Option<Self> {
        None
    }

    fn ln(&self) -> Option<Self> {
        None
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    // One-sided: the envelope never lies below its reward.
    fn touches(&self, reward: &Self, tol: f64) -> bool {
        *self - *reward <= tol
    }

    fn exceeds(&self, other: &Self, tol: f64) -> bool {
        *self - *other > tol
    }

    fn exp(&self) -> Option<Self> {
        Some(f64::exp(*self))
    }

    fn ln(&self) -> Option<Self> {
        (*self > 0.0).then(|| f64::ln(*self))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

/// Parses `"num/den"`, an integer, or a decimal string such as `"-0.125"`
/// into an exact rational. Decimals convert without rounding.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = num_traits::pow(BigInt::from(10u8), frac_part.len());
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Renders a rational the way [`parse_rational`] reads it back.
pub fn format_rational(r: &BigRational) -> String {
    r.to_string()
}

pub(crate) fn is_strictly_between_zero_and_one(r: &BigRational) -> bool {
    r.is_positive() && r < &BigRational::one()
}

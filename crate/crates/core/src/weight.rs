//! Numeric weights: `f64` for fast sweeps, [`BigRational`] for exact identities.

use std::fmt::Debug;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use num_traits::{FromPrimitive, Num};
use serde_json::Value;

/// A field element usable as a probability weight.
pub trait Weight:
    Num + Signed + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug + Send + Sync + 'static
{
    /// Best-effort conversion for reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a tolerance or literal; rationals take the exact binary value.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::zero)
    }

    /// A value `r` with `r >= sqrt(self)`, exact when `self` is a perfect square.
    fn sqrt_upper(&self) -> Self;

    /// Parses a JSON number or a `"p/q"` string.
    fn from_json(v: &Value) -> Option<Self>;

    fn to_json(&self) -> Value;

    /// Strictly positive. Unlike `Signed::is_positive`, false for `+0.0`.
    fn gt0(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly negative. Unlike `Signed::is_negative`, false for `-0.0`.
    fn lt0(&self) -> bool {
        *self < Self::zero()
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
}

impl Weight for f64 {
    fn sqrt_upper(&self) -> Self {
        self.max(0.0).sqrt()
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => parse_rational(s).and_then(|r| r.to_f64()),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

impl Weight for BigRational {
    fn sqrt_upper(&self) -> Self {
        if !self.gt0() {
            return BigRational::zero();
        }
        let (n, d) = (self.numer(), self.denom());
        let (rn, rd) = (n.sqrt(), d.sqrt());
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            return BigRational::new(rn, rd);
        }
        // Rational approximation on a 2^-48 grid, nudged until it dominates.
        let scale = BigInt::from(1u64 << 48);
        let scaled = (self * BigRational::from_integer(&scale * &scale)).ceil();
        let mut root = scaled.to_integer().sqrt() + BigInt::one();
        loop {
            let r = BigRational::new(root.clone(), scale.clone());
            if &(&r * &r) >= self {
                return r;
            }
            root += BigInt::one();
        }
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => parse_decimal(&n.to_string()),
            Value::String(s) => parse_rational(s),
            _ => None,
        }
    }

    fn to_json(&self) -> Value {
        if self.denom().is_one() {
            Value::String(self.numer().to_string())
        } else {
            Value::String(format!("{}/{}", self.numer(), self.denom()))
        }
    }
}

/// Parses `"p/q"`, an integer, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    parse_decimal(s)
}

/// Exact value of a decimal literal such as `0.34` or `1.5e-3`.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
    let shift = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow = num::pow(ten, shift.unsigned_abs() as usize);
    if shift >= 0 {
        value *= pow;
    } else {
        value /= pow;
    }
    Some(if neg { -value } else { value })
}

/// Shorthand for building exact rationals in tests and constructions.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

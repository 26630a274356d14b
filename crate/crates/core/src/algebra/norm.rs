use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use num_traits::Signed;

use super::expansion::{Coeff, Expansion};
use crate::rational::{fmt_rational, parse_rational, Rational};

/// A value of the sharp norm: `0` or `e^{-ρ}` with `ρ` rational.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ValueNorm {
    Zero,
    ExpNeg(Rational),
}

impl ValueNorm {
    pub fn one() -> Self {
        ValueNorm::ExpNeg(Rational::from_integer(0.into()))
    }

    /// `e^{-v}` for a valuation, `0` for `+∞`.
    pub fn from_valuation(v: Option<Rational>) -> Self {
        match v {
            None => ValueNorm::Zero,
            Some(rho) => ValueNorm::ExpNeg(rho),
        }
    }

    /// The exponent `ρ`, `None` for zero.
    pub fn rho(&self) -> Option<&Rational> {
        match self {
            ValueNorm::Zero => None,
            ValueNorm::ExpNeg(r) => Some(r),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ValueNorm::Zero)
    }

    /// Parses the printed form: `0`, `e^-ρ`, or `e^ρ` for a norm above one.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "0" {
            return Some(ValueNorm::Zero);
        }
        let rest = s.strip_prefix("e^")?;
        let rest = rest.trim();
        let rho = match rest.strip_prefix('-') {
            Some(r) => parse_rational(r.trim_start_matches('(').trim_end_matches(')'))?,
            None => -parse_rational(rest.trim_start_matches('(').trim_end_matches(')'))?,
        };
        Some(ValueNorm::ExpNeg(rho))
    }
}

impl Ord for ValueNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValueNorm::Zero, ValueNorm::Zero) => Ordering::Equal,
            (ValueNorm::Zero, _) => Ordering::Less,
            (_, ValueNorm::Zero) => Ordering::Greater,
            (ValueNorm::ExpNeg(a), ValueNorm::ExpNeg(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for ValueNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Norms multiply by adding exponents.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for &ValueNorm {
    type Output = ValueNorm;
    fn mul(self, rhs: &ValueNorm) -> ValueNorm {
        match (self, rhs) {
            (ValueNorm::ExpNeg(a), ValueNorm::ExpNeg(b)) => ValueNorm::ExpNeg(a + b),
            _ => ValueNorm::Zero,
        }
    }
}

impl Mul for ValueNorm {
    type Output = ValueNorm;
    fn mul(self, rhs: ValueNorm) -> ValueNorm {
        &self * &rhs
    }
}

impl fmt::Display for ValueNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueNorm::Zero => write!(f, "0"),
            ValueNorm::ExpNeg(r) if r.is_negative() => write!(f, "e^{}", fmt_rational(&-r)),
            ValueNorm::ExpNeg(r) => write!(f, "e^-{}", fmt_rational(r)),
        }
    }
}

pub fn sharp_norm<C: Coeff>(x: &Expansion<C>) -> ValueNorm {
    ValueNorm::from_valuation(x.valuation())
}

/// Sharp ultrametric `|x - y|_e`.
pub fn distance<C: Coeff>(x: &Expansion<C>, y: &Expansion<C>) -> ValueNorm {
    sharp_norm(&(x - y))
}

//! Rational helpers shared across the crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^n` for any integer `n`.
pub fn pow2(n: &BigInt) -> Rational {
    let shift: usize = n
        .abs()
        .try_into()
        .expect("power-of-two exponent out of range");
    let p = BigInt::one() << shift;
    if n.is_negative() {
        Rational::new(BigInt::one(), p)
    } else {
        Rational::from_integer(p)
    }
}

/// Splits `x` into `floor(x)` and the fractional part in `[0, 1)`.
pub fn split_floor(x: &Rational) -> (BigInt, Rational) {
    let n = x.floor().to_integer();
    let f = x - Rational::from_integer(n.clone());
    (n, f)
}

/// Parses `p` or `p/q` (optional leading sign, surrounding whitespace allowed).
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Formats as `p` or `p/q`.
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Smallest integer `n` with `2^n >= q` for positive `q`.
pub fn ceil_log2(q: &Rational) -> i64 {
    debug_assert!(q.is_positive());
    let mut n = q.numer().bits() as i64 - q.denom().bits() as i64 - 1;
    while pow2(&BigInt::from(n)) < *q {
        n += 1;
    }
    n
}

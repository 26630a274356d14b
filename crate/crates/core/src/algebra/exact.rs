//! Exact real numbers in the ℚ-span of rational powers of two.
//!
//! Every pointwise value of a representable net at a grid index `k` has the
//! form `Σ c_i 2^{-k a_i}`. Writing each exponent as `n + f` with `f ∈ [0, 1)`
//! and folding `2^{-n}` into the coefficient gives `Σ_f r_f 2^{-f}`. The powers
//! `2^{-f}` for distinct `f ∈ [0, 1) ∩ ℚ` are linearly independent over ℚ
//! (`x^q - 2` is irreducible), so this grouped form is unique: it is the
//! remainder of the value polynomial modulo the minimal polynomial of
//! `2^{-1/q}`. Zero testing is therefore structural, and the sign of a
//! non-zero value is found by interval refinement, which must terminate.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::{fmt_rational, pow2, split_floor, Rational};

const START_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactReal {
    /// fractional exponent `f ∈ [0,1)` ↦ non-zero rational coefficient of `2^{-f}`
    groups: BTreeMap<Rational, Rational>,
}

impl ExactReal {
    pub fn zero() -> Self {
        ExactReal::default()
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut groups = BTreeMap::new();
        if !q.is_zero() {
            groups.insert(Rational::zero(), q);
        }
        ExactReal { groups }
    }

    /// `c · 2^{-x}`.
    pub fn scaled_pow2(c: &Rational, x: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let (n, f) = split_floor(x);
        let coeff = c * pow2(&-n);
        let mut groups = BTreeMap::new();
        groups.insert(f, coeff);
        ExactReal { groups }
    }

    pub fn is_zero(&self) -> bool {
        self.groups.is_empty()
    }

    /// The value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.groups.len() {
            0 => Some(Rational::zero()),
            1 => self
                .groups
                .get(&Rational::zero())
                .cloned(),
            _ => None,
        }
    }

    fn insert_add(groups: &mut BTreeMap<Rational, Rational>, f: Rational, c: Rational) {
        if c.is_zero() {
            return;
        }
        let remove = match groups.get_mut(&f) {
            Some(slot) => {
                *slot += c;
                slot.is_zero()
            }
            None => {
                groups.insert(f, c);
                false
            }
        };
        if remove {
            groups.retain(|_, v| !v.is_zero());
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        ExactReal {
            groups: self
                .groups
                .iter()
                .map(|(f, c)| (f.clone(), c * q))
                .collect(),
        }
    }

    /// Multiplies by `2^{-x}`.
    pub fn mul_pow2(&self, x: &Rational) -> Self {
        self * &Self::scaled_pow2(&Rational::one(), x)
    }

    pub fn signum(&self) -> Ordering {
        let mut iter = self.groups.values();
        match (iter.next(), self.groups.len()) {
            (None, _) => return Ordering::Equal,
            (Some(c), 1) => return c.cmp(&Rational::zero()),
            _ => {}
        }
        if let Some(s) = self.dominant_sign() {
            return s;
        }
        self.refine_sign()
    }

    /// Sign of the largest group when it outweighs all others by magnitude
    /// estimates alone.
    fn dominant_sign(&self) -> Option<Ordering> {
        // |r 2^{-f}| lies in (2^{L-2}, 2^{L+1}) with L = bits(num) - bits(den)
        let mut levels: Vec<(i64, &Rational)> = self
            .groups
            .values()
            .map(|c| (c.numer().bits() as i64 - c.denom().bits() as i64, c))
            .collect();
        levels.sort_by_key(|l| std::cmp::Reverse(l.0));
        let (top, c) = levels[0];
        let second = levels[1].0;
        let others = (levels.len() - 1) as u64;
        let spread = 64 - (others - 1).leading_zeros() as i64; // ceil(log2(others))
        if top - 2 >= second + 1 + spread {
            Some(c.cmp(&Rational::zero()))
        } else {
            None
        }
    }

    fn refine_sign(&self) -> Ordering {
        let den = self
            .groups
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let scaled: Vec<(&Rational, BigInt)> = self
            .groups
            .iter()
            .map(|(f, c)| (f, (c * Rational::from_integer(den.clone())).to_integer()))
            .collect();
        let mut bits = START_BITS;
        loop {
            let mut lower = BigInt::zero();
            let mut upper = BigInt::zero();
            for (f, n) in &scaled {
                let (lo, hi) = pow2_neg_bounds(f, bits);
                if n.is_positive() {
                    lower += n * &lo;
                    upper += n * &hi;
                } else {
                    lower += n * &hi;
                    upper += n * &lo;
                }
            }
            if lower.is_positive() {
                return Ordering::Greater;
            }
            if upper.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// Rational bounds `lo <= self <= hi` at the given working precision.
    pub fn bounds(&self, bits: u32) -> (Rational, Rational) {
        let scale = Rational::from_integer(BigInt::one() << bits);
        let mut lo_sum = Rational::zero();
        let mut hi_sum = Rational::zero();
        for (f, c) in &self.groups {
            let (lo, hi) = pow2_neg_bounds(f, bits);
            let lo = Rational::from_integer(lo) / &scale;
            let hi = Rational::from_integer(hi) / &scale;
            if c.is_positive() {
                lo_sum += c * &lo;
                hi_sum += c * &hi;
            } else {
                lo_sum += c * &hi;
                hi_sum += c * &lo;
            }
        }
        (lo_sum, hi_sum)
    }

    /// A rational upper bound (64-bit working precision).
    pub fn upper_rational(&self) -> Rational {
        self.bounds(START_BITS).1
    }

    /// A rational lower bound (64-bit working precision).
    pub fn lower_rational(&self) -> Rational {
        self.bounds(START_BITS).0
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    pub fn max(&self, other: &Self) -> Self {
        if self.cmp_exact(other) == Ordering::Less {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn min(&self, other: &Self) -> Self {
        if self.cmp_exact(other) == Ordering::Greater {
            other.clone()
        } else {
            self.clone()
        }
    }

    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        if self == other {
            return Ordering::Equal;
        }
        (self - other).signum()
    }

    /// Rough `f64` value, for display only.
    pub fn approx(&self) -> f64 {
        self.groups
            .iter()
            .map(|(f, c)| {
                let c = c.to_f64().unwrap_or(0.0);
                c * 2f64.powf(-f.to_f64().unwrap_or(0.0))
            })
            .sum()
    }
}

/// Integer bounds `lo <= 2^bits · 2^{-f} <= hi` for `f = p/q ∈ [0,1)`, cached.
///
/// Small denominators use the exact integer `q`-th root; large ones a
/// fixed-point series for `exp(-f ln 2)` with directed rounding.
fn pow2_neg_bounds(f: &Rational, bits: u32) -> (BigInt, BigInt) {
    type Bounds = HashMap<(Rational, u32), (BigInt, BigInt)>;
    static CACHE: OnceLock<Mutex<Bounds>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&(f.clone(), bits)) {
        return v.clone();
    }
    let value = if f.is_zero() {
        let one = BigInt::one() << bits;
        (one.clone(), one)
    } else {
        let p = f.numer().to_u64().expect("fraction numerator fits u64");
        let q = f.denom().to_u64().expect("fraction denominator fits u64");
        if bits as u64 * q <= ROOT_LIMIT {
            let radicand = BigInt::one() << (bits as u64 * q - p);
            let lo = radicand.nth_root(q as u32);
            let hi = &lo + 1;
            (lo, hi)
        } else {
            series_bounds(f, bits)
        }
    };
    debug_assert_eq!(value.0.sign(), Sign::Plus);
    cache
        .lock()
        .unwrap()
        .insert((f.clone(), bits), value.clone());
    value
}

/// Radicand size (in bits) up to which exact roots are used.
const ROOT_LIMIT: u64 = 1 << 13;

/// Bounds on `2^w ln 2` as `(lo, hi)`, from `Σ 1/(k 2^k)`.
fn ln2_fixed(w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let mut lo = BigInt::zero();
    // each floored term loses less than one unit; the tail past w terms is
    // below 2^{-w}
    for k in 1..=w {
        lo += (&one >> k) / BigInt::from(k);
    }
    let hi = &lo + BigInt::from(w) + 1;
    (lo, hi)
}

/// `(lo, hi)` with `lo <= 2^w exp(y / 2^w) <= hi` for `0 <= y < 2^w`.
fn exp_fixed(y: &BigInt, w: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << w;
    let mut lo_sum = one.clone();
    let mut term = one.clone();
    let mut n = 1u32;
    loop {
        term = ((&term * y) >> w) / BigInt::from(n);
        if term.is_zero() {
            break;
        }
        lo_sum += &term;
        n += 1;
    }
    let mut hi_sum = one.clone();
    let mut term = one;
    let mut n = 1u32;
    while term > BigInt::one() {
        let num: BigInt = &term * y + ((BigInt::one() << w) - 1);
        term = Integer::div_ceil(&(num >> w), &BigInt::from(n));
        hi_sum += &term;
        n += 1;
    }
    // once a term is at most one unit the remaining ones sum to at most it
    hi_sum += 1;
    (lo_sum, hi_sum)
}

fn series_bounds(f: &Rational, bits: u32) -> (BigInt, BigInt) {
    let w = bits + 64;
    let (ln_lo, ln_hi) = ln2_fixed(w);
    // x = f ln 2 in fixed point
    let x_lo = (&ln_lo * f.numer()).div_floor(f.denom());
    let x_hi = (&ln_hi * f.numer()).div_ceil(f.denom());
    let (_, e_hi) = exp_fixed(&x_hi, w);
    let (e_lo, _) = exp_fixed(&x_lo, w);
    // 2^{-f} = 1 / exp(x), in units of 2^{-bits}
    let num = BigInt::one() << (w + bits);
    let lo = num.div_floor(&e_hi);
    let hi = num.div_ceil(&e_lo);
    (lo, hi)
}

impl Add for &ExactReal {
    type Output = ExactReal;
    fn add(self, rhs: &ExactReal) -> ExactReal {
        let mut groups = self.groups.clone();
        for (f, c) in &rhs.groups {
            ExactReal::insert_add(&mut groups, f.clone(), c.clone());
        }
        ExactReal { groups }
    }
}

impl Sub for &ExactReal {
    type Output = ExactReal;
    fn sub(self, rhs: &ExactReal) -> ExactReal {
        self + &(-rhs)
    }
}

impl Neg for &ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        ExactReal {
            groups: self
                .groups
                .iter()
                .map(|(f, c)| (f.clone(), -c))
                .collect(),
        }
    }
}

impl Mul for &ExactReal {
    type Output = ExactReal;
    fn mul(self, rhs: &ExactReal) -> ExactReal {
        let mut groups = BTreeMap::new();
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        for (f1, c1) in &self.groups {
            for (f2, c2) in &rhs.groups {
                let mut f = f1 + f2;
                let mut c = c1 * c2;
                if f >= Rational::one() {
                    f -= Rational::one();
                    c *= &half;
                }
                ExactReal::insert_add(&mut groups, f, c);
            }
        }
        ExactReal { groups }
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.groups.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.groups.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if e.is_zero() {
                write!(f, "{}", fmt_rational(c))?;
            } else {
                write!(f, "{}*2^(-{})", fmt_rational(c), fmt_rational(e))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn p(c: i64, x: Rational) -> ExactReal {
        ExactReal::scaled_pow2(&int(c), &x)
    }

    #[test]
    fn grouping_is_canonical() {
        // 2^{-1/2} squared is 1/2
        let s = p(1, rat(1, 2));
        assert_eq!(&s * &s, ExactReal::from_rational(rat(1, 2)));
        // 2^{-3/2} = 2^{-1/2} / 2
        assert_eq!(p(2, rat(3, 2)), p(1, rat(1, 2)));
        assert!((&p(1, int(1)) - &ExactReal::from_rational(rat(1, 2))).is_zero());
    }

    #[test]
    fn signs() {
        // 3·2^{-3} vs 2·2^{-2}: 0.375 < 0.5
        let u = p(3, int(3));
        let v = p(2, int(2));
        assert_eq!(u.cmp_exact(&v), Ordering::Less);
        // sqrt(2)/2 vs 7/10 -> 0.7071.. > 0.7
        let s = p(1, rat(1, 2));
        assert_eq!(s.cmp_exact(&ExactReal::from_rational(rat(7, 10))), Ordering::Greater);
        // close call that needs refinement: 2^{-1/2} vs 7071067811865475/10^16
        let close = ExactReal::from_rational(Rational::new(
            BigInt::from(7071067811865475i64),
            BigInt::from(10_000_000_000_000_000i64),
        ));
        assert_eq!(s.cmp_exact(&close), Ordering::Greater);
        let close_hi = ExactReal::from_rational(Rational::new(
            BigInt::from(7071067811865476i64),
            BigInt::from(10_000_000_000_000_000i64),
        ));
        assert_eq!(s.cmp_exact(&close_hi), Ordering::Less);
    }

    #[test]
    fn bounds_bracket_value() {
        let x = &p(3, rat(1, 3)) - &p(1, rat(2, 5));
        let (lo, hi) = x.bounds(64);
        assert!(lo <= hi);
        let approx = 3.0 * 2f64.powf(-1.0 / 3.0) - 2f64.powf(-0.4);
        let lo = lo.to_f64().unwrap();
        let hi = hi.to_f64().unwrap();
        assert!(lo <= approx + 1e-12 && approx - 1e-12 <= hi);
    }

    #[test]
    fn abs_min_max() {
        let a = p(-1, rat(1, 2));
        assert_eq!(a.abs(), p(1, rat(1, 2)));
        let b = ExactReal::from_rational(rat(1, 2));
        assert_eq!(a.max(&b), b);
        assert_eq!(a.min(&b), a);
    }

    #[test]
    fn series_bounds_agree_with_roots() {
        for (p, q) in [(1, 2), (1, 3), (5, 7), (11, 12), (1, 97), (96, 97)] {
            let f = Rational::new(BigInt::from(p), BigInt::from(q));
            let (lo, hi) = series_bounds(&f, 64);
            let exact = (BigInt::one() << (64 * q - p) as u32).nth_root(q as u32);
            assert!(lo <= exact && exact < hi, "{}/{}", p, q);
            assert!(&hi - &lo <= BigInt::from(2));
        }
    }
}

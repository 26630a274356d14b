//! Seeded generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;

use gennum::hahn_banach::{GenFrac, LVector};
use gennum::rational::Rational;
use gennum::{Mask, NormalForm, Term, ValueNorm};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// A term as generated, before any canonicalization.
#[derive(Clone, Debug)]
pub struct RawTerm {
    pub coeff: Rational,
    pub exponent: Rational,
    pub modulus: u32,
    pub residues: Vec<u32>,
}

impl RawTerm {
    fn selects(&self, k: u32) -> bool {
        self.residues.contains(&(k % self.modulus))
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub raw: Vec<RawTerm>,
    pub form: NormalForm,
}

pub fn build(raw: Vec<RawTerm>) -> Generated {
    let terms = raw
        .iter()
        .map(|t| {
            Term::new(
                t.coeff.clone(),
                t.exponent.clone(),
                Mask::new(t.modulus, t.residues.iter().copied()).expect("non-empty residues"),
            )
        })
        .collect();
    Generated {
        form: NormalForm::canonicalize(terms),
        raw,
    }
}

pub struct Shape {
    pub max_terms: usize,
    pub max_den: i64,
    pub max_modulus: u32,
    pub exponent_range: i64,
    pub coeff_range: i64,
}

pub const SMALL: Shape = Shape {
    max_terms: 4,
    max_den: 4,
    max_modulus: 4,
    exponent_range: 3,
    coeff_range: 9,
};

pub fn raw_term(r: &mut ChaCha8Rng, s: &Shape, masked: bool) -> RawTerm {
    let mut c = 0;
    while c == 0 {
        c = r.gen_range(-s.coeff_range..=s.coeff_range);
    }
    let cd = r.gen_range(1..=s.max_den);
    let ed = r.gen_range(1..=s.max_den);
    let en = r.gen_range(-s.exponent_range * ed..=s.exponent_range * ed);
    let (modulus, residues) = if masked && r.gen_bool(0.5) {
        let m = r.gen_range(2..=s.max_modulus.max(2));
        let mut res: Vec<u32> = (0..m).filter(|_| r.gen_bool(0.5)).collect();
        if res.is_empty() {
            res.push(r.gen_range(0..m));
        }
        (m, res)
    } else {
        (1, vec![0])
    };
    RawTerm {
        coeff: q(c, cd),
        exponent: q(en, ed),
        modulus,
        residues,
    }
}

pub fn normal_form(r: &mut ChaCha8Rng, s: &Shape, masked: bool) -> Generated {
    let n = r.gen_range(0..=s.max_terms);
    build((0..n).map(|_| raw_term(r, s, masked)).collect())
}

pub fn nonzero_form(r: &mut ChaCha8Rng, s: &Shape, masked: bool) -> Generated {
    loop {
        let g = normal_form(r, s, masked);
        if oracle_valuation(&g.raw).is_some() {
            return g;
        }
    }
}

pub fn negated(raw: &[RawTerm]) -> Vec<RawTerm> {
    raw.iter()
        .map(|t| RawTerm {
            coeff: -t.coeff.clone(),
            ..t.clone()
        })
        .collect()
}

pub fn concat(a: &[RawTerm], b: &[RawTerm]) -> Vec<RawTerm> {
    a.iter().chain(b).cloned().collect()
}

pub fn product(a: &[RawTerm], b: &[RawTerm]) -> Vec<RawTerm> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            let m = x.modulus.lcm(&y.modulus);
            let residues: Vec<u32> = (0..m).filter(|&k| x.selects(k) && y.selects(k)).collect();
            if residues.is_empty() {
                continue;
            }
            out.push(RawTerm {
                coeff: &x.coeff * &y.coeff,
                exponent: &x.exponent + &y.exponent,
                modulus: m,
                residues,
            });
        }
    }
    out
}

/// Valuation from raw terms: for every residue class modulo the common
/// period, sum the coefficients per exponent and take the least exponent
/// with a non-zero sum.
pub fn oracle_valuation(raw: &[RawTerm]) -> Option<Rational> {
    let period = raw.iter().fold(1u32, |acc, t| acc.lcm(&t.modulus));
    let mut best: Option<Rational> = None;
    for r in 0..period {
        let mut sums: BTreeMap<Rational, Rational> = BTreeMap::new();
        for t in raw.iter().filter(|t| t.selects(r)) {
            *sums.entry(t.exponent.clone()).or_insert_with(Rational::zero) += &t.coeff;
        }
        if let Some((e, _)) = sums.iter().find(|(_, c)| !c.is_zero()) {
            if best.as_ref().is_none_or(|b| e < b) {
                best = Some(e.clone());
            }
        }
    }
    best
}

pub fn oracle_norm(raw: &[RawTerm]) -> ValueNorm {
    match oracle_valuation(raw) {
        None => ValueNorm::Zero,
        Some(v) => ValueNorm::ExpNeg(v),
    }
}

/// `floor(2^bits · 2^{-x})` for rational `0 <= x < 1`.
fn pow2_fixed(x: &Rational, bits: u32) -> BigInt {
    let (p, d) = (x.numer().clone(), x.denom().clone());
    let dq = d.to_u32().expect("small denominator");
    // 2^{bits - p/d} = (2^{bits·d - p})^{1/d}
    let e = BigInt::from(bits) * &d - &p;
    let radicand = BigInt::one() << e.to_usize().expect("exponent fits");
    radicand.nth_root(dq)
}

/// `2^{-n}` for an integer `n` as an exact rational.
fn pow2_exact(n: &BigInt) -> Rational {
    let shift = n.abs().to_usize().expect("shift fits");
    let p = BigInt::one() << shift;
    if n.is_negative() {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Sign of `Σ c_i 2^{-x_i}`.
///
/// Exponents are reduced to their fractional parts with the integer parts
/// folded exactly into the coefficients. The powers `2^{-f}` for distinct
/// `f` in `[0, 1)` are linearly independent over the rationals, so the sum
/// vanishes exactly when every folded coefficient does; otherwise the
/// fixed-point sum is refined until its sign clears the rounding slack.
/// `None` only if that fails at 16384 bits.
pub fn oracle_sign(terms: &[(Rational, Rational)]) -> Option<Ordering> {
    let mut folded: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (c, x) in terms {
        let whole = x.floor().to_integer();
        let frac = x - Rational::from_integer(whole.clone());
        *folded.entry(frac).or_insert_with(Rational::zero) += c * pow2_exact(&whole);
    }
    folded.retain(|_, c| !c.is_zero());
    if folded.is_empty() {
        return Some(Ordering::Equal);
    }
    let den = folded.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<(Rational, BigInt)> = folded
        .iter()
        .map(|(f, c)| (f.clone(), (c * Rational::from_integer(den.clone())).to_integer()))
        .collect();
    let mut bits = 640;
    while bits <= 16384 {
        let mut sum = BigInt::zero();
        let mut slack = BigInt::zero();
        for (f, n) in &ints {
            sum += n * pow2_fixed(f, bits);
            slack += n.abs();
        }
        if sum > slack {
            return Some(Ordering::Greater);
        }
        if -&sum > slack {
            return Some(Ordering::Less);
        }
        bits *= 2;
    }
    None
}

/// The `(coeff, exponent)` pairs of `x` active at grid index `k`, as
/// `(c, k·a)` so that the value is `Σ c 2^{-k a}`.
pub fn active_scaled(raw: &[RawTerm], k: u32) -> Vec<(Rational, Rational)> {
    raw.iter()
        .filter(|t| t.selects(k))
        .map(|t| (t.coeff.clone(), &t.exponent * Rational::from_integer(k.into())))
        .collect()
}

/// `|Σ raw at k| <= c · 2^{-k rho}` by the oracle; `None` if undecided.
pub fn oracle_within(raw: &[RawTerm], k: u32, c: &Rational, rho: &Rational) -> Option<bool> {
    let value = active_scaled(raw, k);
    let sign = match oracle_sign(&value)? {
        Ordering::Equal => return Some(true),
        s => s,
    };
    let mut diff: Vec<(Rational, Rational)> = value
        .into_iter()
        .map(|(a, x)| if sign == Ordering::Less { (-a, x) } else { (a, x) })
        .collect();
    diff.push((-c.clone(), rho * Rational::from_integer(k.into())));
    oracle_sign(&diff).map(|s| s != Ordering::Greater)
}

pub fn raw_of(x: &NormalForm) -> Vec<RawTerm> {
    x.terms()
        .iter()
        .map(|t| RawTerm {
            coeff: t.coeff.clone(),
            exponent: t.exponent.clone(),
            modulus: t.mask.modulus(),
            residues: t.mask.residues().to_vec(),
        })
        .collect()
}

/// Multiplies by `c · ε^shift`.
pub fn scaled_raw(raw: &[RawTerm], c: &Rational, shift: &Rational) -> Vec<RawTerm> {
    raw.iter()
        .map(|t| RawTerm {
            coeff: &t.coeff * c,
            exponent: &t.exponent + shift,
            ..t.clone()
        })
        .collect()
}

pub fn pick<'a, T>(r: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[r.gen_range(0..items.len())]
}

/// A mask-free fraction of `L`.
pub fn random_frac(r: &mut ChaCha8Rng) -> GenFrac {
    let shape = Shape { max_terms: 2, max_den: 3, max_modulus: 1, exponent_range: 2, coeff_range: 5 };
    let num = nonzero_form(r, &shape, false).form;
    let den = if r.gen_bool(0.5) {
        NormalForm::from_rational(q(1, 1))
    } else {
        nonzero_form(r, &shape, false).form
    };
    GenFrac::new(num, den).unwrap()
}

pub fn random_vector(r: &mut ChaCha8Rng) -> LVector {
    LVector::new(vec![random_frac(r), random_frac(r)])
}

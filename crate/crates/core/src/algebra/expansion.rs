use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::mask::{common_modulus, Mask};
use crate::rational::Rational;

/// Coefficient ring of an expansion: rationals or Gaussian rationals.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Debug
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
{
}

pub type GaussianRational = Complex<Rational>;

/// One summand `coeff · ε^exponent` restricted to the indices selected by `mask`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<C = Rational> {
    pub coeff: C,
    pub exponent: Rational,
    pub mask: Mask,
}

impl<C> Term<C> {
    pub fn new(coeff: C, exponent: Rational, mask: Mask) -> Self {
        Term {
            coeff,
            exponent,
            mask,
        }
    }
}

/// Canonical finite asymptotic expansion of a generalized number.
///
/// Terms are ordered by mask, then by ascending exponent. For a fixed exponent
/// the masks of the terms are pairwise disjoint and every coefficient is
/// non-zero, so structural equality is equality of classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<C = Rational> {
    terms: Vec<Term<C>>,
}

pub type NormalForm = Expansion<Rational>;
pub type ComplexNormalForm = Expansion<GaussianRational>;

impl<C: Coeff> Expansion<C> {
    pub fn zero() -> Self {
        Expansion { terms: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(c, Rational::zero())
    }

    pub fn monomial(c: C, exponent: Rational) -> Self {
        Self::canonicalize(vec![Term::new(c, exponent, Mask::all())])
    }

    /// `1` on the indices selected by `mask`, `0` elsewhere.
    pub fn indicator(mask: Mask) -> Self {
        Self::canonicalize(vec![Term::new(C::one(), Rational::zero(), mask)])
    }

    /// Brings an arbitrary term list into canonical form.
    pub fn canonicalize(terms: Vec<Term<C>>) -> Self {
        let len = common_modulus(terms.iter().map(|t| &t.mask));
        let mut by_exponent: BTreeMap<Rational, Vec<C>> = BTreeMap::new();
        for t in terms {
            let row = by_exponent
                .entry(t.exponent)
                .or_insert_with(|| vec![C::zero(); len as usize]);
            for (r, slot) in row.iter_mut().enumerate() {
                if t.mask.selects(r as u32) {
                    *slot = slot.clone() + t.coeff.clone();
                }
            }
        }

        let mut out = Vec::new();
        for (exponent, row) in by_exponent {
            let mut groups: Vec<(C, Vec<bool>)> = Vec::new();
            for (r, c) in row.into_iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                match groups.iter_mut().find(|(g, _)| *g == c) {
                    Some((_, ind)) => ind[r] = true,
                    None => {
                        let mut ind = vec![false; len as usize];
                        ind[r] = true;
                        groups.push((c, ind));
                    }
                }
            }
            for (c, ind) in groups {
                let mask = Mask::from_indicator(&ind).expect("group is non-empty");
                out.push(Term::new(c, exponent.clone(), mask));
            }
        }
        out.sort_by(|a, b| {
            a.mask
                .cmp(&b.mask)
                .then_with(|| a.exponent.cmp(&b.exponent))
        });
        Expansion { terms: out }
    }

    pub fn terms(&self) -> &[Term<C>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every mask selects all indices.
    pub fn is_mask_free(&self) -> bool {
        self.terms.iter().all(|t| t.mask.is_all())
    }

    pub fn modulus(&self) -> u32 {
        common_modulus(self.terms.iter().map(|t| &t.mask))
    }

    /// Sharp valuation: the least exponent present, or `None` for zero (`+∞`).
    pub fn valuation(&self) -> Option<Rational> {
        self.terms.iter().map(|t| t.exponent.clone()).min()
    }

    /// Per-branch view modulo `len`: the `(exponent, coeff)` pairs active on
    /// residue `r`, in ascending exponent order.
    pub fn branches(&self, len: u32) -> Vec<Vec<(Rational, C)>> {
        (0..len)
            .map(|r| {
                let mut b: Vec<(Rational, C)> = self
                    .terms
                    .iter()
                    .filter(|t| t.mask.selects(r))
                    .map(|t| (t.exponent.clone(), t.coeff.clone()))
                    .collect();
                b.sort_by(|x, y| x.0.cmp(&y.0));
                b
            })
            .collect()
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::canonicalize(
            self.terms
                .iter()
                .map(|t| Term::new(t.coeff.clone() * c.clone(), t.exponent.clone(), t.mask.clone()))
                .collect(),
        )
    }

    /// Multiplies by `ε^shift`.
    pub fn shift(&self, shift: &Rational) -> Self {
        Expansion {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(t.coeff.clone(), &t.exponent + shift, t.mask.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(C::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// A non-zero `y` with `x · y = 0`, if some residue branch of `x` vanishes.
    ///
    /// The witness is the indicator of all vanishing branches. Expansions with
    /// full support have no annihilator in this class.
    pub fn annihilator_witness(&self) -> Option<Self> {
        let len = self.modulus();
        let vanishing: Vec<bool> = (0..len)
            .map(|r| !self.terms.iter().any(|t| t.mask.selects(r)))
            .collect();
        Mask::from_indicator(&vanishing).map(Self::indicator)
    }
}

impl NormalForm {
    pub fn from_rational(q: Rational) -> Self {
        Self::constant(q)
    }

    /// The generator `α = [(ε)_ε]`.
    pub fn epsilon() -> Self {
        Self::monomial(Rational::one(), Rational::one())
    }

    /// Terms active at grid index `k`, as `(coeff, exponent)` pairs.
    pub fn active_at(&self, k: u32) -> Vec<(Rational, Rational)> {
        self.terms
            .iter()
            .filter(|t| t.mask.selects(k))
            .map(|t| (t.coeff.clone(), t.exponent.clone()))
            .collect()
    }

    /// Sum of the absolute values of the coefficients.
    pub fn abs_coeff_sum(&self) -> Rational {
        use num_traits::Signed;
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }
}

impl ComplexNormalForm {
    /// Embeds a real expansion.
    pub fn from_real(x: &NormalForm) -> Self {
        Self::canonicalize(
            x.terms()
                .iter()
                .map(|t| {
                    Term::new(
                        Complex::new(t.coeff.clone(), Rational::zero()),
                        t.exponent.clone(),
                        t.mask.clone(),
                    )
                })
                .collect(),
        )
    }
}

impl<C: Coeff> Add for &Expansion<C> {
    type Output = Expansion<C>;
    fn add(self, rhs: &Expansion<C>) -> Expansion<C> {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        Expansion::canonicalize(terms)
    }
}

impl<C: Coeff> Sub for &Expansion<C> {
    type Output = Expansion<C>;
    fn sub(self, rhs: &Expansion<C>) -> Expansion<C> {
        self + &(-rhs)
    }
}

impl<C: Coeff> Neg for &Expansion<C> {
    type Output = Expansion<C>;
    fn neg(self) -> Expansion<C> {
        Expansion {
            terms: self
                .terms
                .iter()
                .map(|t| Term::new(-t.coeff.clone(), t.exponent.clone(), t.mask.clone()))
                .collect(),
        }
    }
}

impl<C: Coeff> Mul for &Expansion<C> {
    type Output = Expansion<C>;
    fn mul(self, rhs: &Expansion<C>) -> Expansion<C> {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                if let Some(mask) = a.mask.intersect(&b.mask) {
                    terms.push(Term::new(
                        a.coeff.clone() * b.coeff.clone(),
                        &a.exponent + &b.exponent,
                        mask,
                    ));
                }
            }
        }
        Expansion::canonicalize(terms)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl<C: Coeff> $tr for Expansion<C> {
            type Output = Expansion<C>;
            fn $m(self, rhs: Expansion<C>) -> Expansion<C> {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<C: Coeff> Neg for Expansion<C> {
    type Output = Expansion<C>;
    fn neg(self) -> Expansion<C> {
        -&self
    }
}

/// Ring operation selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
    Neg,
}

/// Applies a ring operation; `Neg` ignores `y`.
pub fn ring_op<C: Coeff>(kind: RingOp, x: &Expansion<C>, y: &Expansion<C>) -> Expansion<C> {
    match kind {
        RingOp::Add => x + y,
        RingOp::Sub => x - y,
        RingOp::Mul => x * y,
        RingOp::Neg => -x,
    }
}

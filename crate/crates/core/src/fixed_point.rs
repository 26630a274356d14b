//! Contractive self-maps of generalized numbers: Banach iteration with exact
//! residuals, and truncated Neumann series for affine maps.

use std::fmt;

use crate::algebra::{distance, sharp_norm, NormalForm, ValueNorm};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// `x ↦ a·x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub a: NormalForm,
    pub b: NormalForm,
}

impl AffineMap {
    pub fn new(a: NormalForm, b: NormalForm) -> Self {
        AffineMap { a, b }
    }

    /// `|a|_e < 1`, which makes the map a strict contraction.
    pub fn is_contraction(&self) -> bool {
        sharp_norm(&self.a) < ValueNorm::one()
    }

    pub fn apply(&self, x: &NormalForm) -> NormalForm {
        &(&self.a * x) + &self.b
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x -> ({})*x + ({})", self.a, self.b)
    }
}

/// `x ↦ Σ_j c_j x^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    pub coeffs: Vec<NormalForm>,
}

impl PolynomialMap {
    pub fn new(coeffs: Vec<NormalForm>) -> Self {
        PolynomialMap { coeffs }
    }

    /// Horner evaluation with ring operations only.
    pub fn apply(&self, x: &NormalForm) -> NormalForm {
        self.coeffs
            .iter()
            .rev()
            .fold(NormalForm::zero(), |acc, c| &(&acc * x) + c)
    }
}

impl fmt::Display for PolynomialMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| format!("({})*x^{}", c, j))
            .collect();
        write!(f, "x -> {}", parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SelfMap {
    Affine(AffineMap),
    Polynomial(PolynomialMap),
}

impl SelfMap {
    pub fn apply(&self, x: &NormalForm) -> NormalForm {
        match self {
            SelfMap::Affine(m) => m.apply(x),
            SelfMap::Polynomial(m) => m.apply(x),
        }
    }
}

impl fmt::Display for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelfMap::Affine(m) => m.fmt(f),
            SelfMap::Polynomial(m) => m.fmt(f),
        }
    }
}

/// Iterates `x_0, …, x_n` with residuals `|f(x_j) − x_j|_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub iterates: Vec<NormalForm>,
    pub residuals: Vec<ValueNorm>,
}

impl IterationTrace {
    pub fn last(&self) -> &NormalForm {
        self.iterates.last().expect("a trace holds its seed")
    }
}

/// Runs `n` steps of `x ↦ f(x)` from `x0`.
///
/// Affine maps must satisfy `|a|_e < 1`; every map must show strictly
/// decreasing residuals until one vanishes.
pub fn banach_iterate(f: &SelfMap, x0: &NormalForm, n: usize) -> Result<IterationTrace> {
    if let SelfMap::Affine(m) = f {
        if !m.is_contraction() {
            return Err(Error::Contraction {
                step: 0,
                what: format!("|a|_e = {} is not below 1", sharp_norm(&m.a)),
            });
        }
    }
    let mut iterates = Vec::with_capacity(n + 1);
    let mut residuals = Vec::with_capacity(n + 1);
    let mut x = x0.clone();
    for step in 0..=n {
        let fx = f.apply(&x);
        let r = distance(&fx, &x);
        if let Some(prev) = residuals.last() {
            if !r.is_zero() && &r >= prev {
                return Err(Error::Contraction {
                    step,
                    what: format!("residual {} does not decrease from {}", r, prev),
                });
            }
        }
        iterates.push(x);
        residuals.push(r);
        x = fx;
    }
    Ok(IterationTrace {
        iterates,
        residuals,
    })
}

/// `|x_j − y_j|_e` along two traces of equal length.
pub fn trace_distances(t1: &IterationTrace, t2: &IterationTrace) -> Vec<ValueNorm> {
    t1.iterates
        .iter()
        .zip(&t2.iterates)
        .map(|(x, y)| distance(x, y))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    /// `Σ_{j < order} a^j b`.
    pub xstar: NormalForm,
    /// `|f(xstar) − xstar|_e = |a^order · b|_e`.
    pub residual: ValueNorm,
    /// `e^{-order·v(a)} · |b|_e`, an upper bound for the residual.
    pub bound: ValueNorm,
}

/// Truncated Neumann series for the fixed point of an affine contraction.
pub fn affine_fixed_point(f: &AffineMap, order: u32) -> Result<FixedPoint> {
    if !f.is_contraction() {
        return Err(Error::Contraction {
            step: 0,
            what: format!("|a|_e = {} is not below 1", sharp_norm(&f.a)),
        });
    }
    let mut xstar = NormalForm::zero();
    let mut power = f.b.clone();
    for _ in 0..order {
        xstar = &xstar + &power;
        power = &f.a * &power;
    }
    let residual = distance(&f.apply(&xstar), &xstar);
    debug_assert_eq!(residual, sharp_norm(&power));
    let bound = match f.a.valuation() {
        Some(v) => &ValueNorm::ExpNeg(v * Rational::from_integer(order.into())) * &sharp_norm(&f.b),
        None if order == 0 => sharp_norm(&f.b),
        None => ValueNorm::Zero,
    };
    Ok(FixedPoint {
        xstar,
        residual,
        bound,
    })
}

//! The subfield `L = Q(α)`, `α = [(ε)_ε]`, of generalized numbers, normed
//! coordinate spaces over it, and the single-step norm-preserving extension
//! of a linear functional.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::algebra::{NormalForm, ValueNorm};
use crate::dsl::parse_expression;
use crate::error::{Error, Result};
use crate::rational::Rational;
use num_traits::{One, Zero};

/// `num / den` with mask-free numerator and non-zero mask-free denominator.
///
/// The denominator is kept with leading term exactly `1`.
#[derive(Clone, Debug)]
pub struct GenFrac {
    num: NormalForm,
    den: NormalForm,
}

impl GenFrac {
    pub fn new(num: NormalForm, den: NormalForm) -> Result<Self> {
        if !num.is_mask_free() || !den.is_mask_free() {
            return Err(Error::precondition(
                "elements of L have mask-free numerator and denominator",
            ));
        }
        if den.is_zero() {
            return Err(Error::precondition("zero denominator"));
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: NormalForm, den: NormalForm) -> Self {
        let lead = &den.terms()[0];
        let inv = Rational::one() / &lead.coeff;
        let shift = -lead.exponent.clone();
        let den = den.scale(&inv).shift(&shift);
        let num = num.scale(&inv).shift(&shift);
        if den.terms().len() == 1 {
            return GenFrac {
                num,
                den: NormalForm::from_rational(Rational::one()),
            };
        }
        GenFrac { num, den }
    }

    pub fn from_normal_form(x: NormalForm) -> Result<Self> {
        Self::new(x, NormalForm::from_rational(Rational::one()))
    }

    pub fn from_rational(q: Rational) -> Self {
        GenFrac {
            num: NormalForm::from_rational(q),
            den: NormalForm::from_rational(Rational::one()),
        }
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    /// The generator `α`.
    pub fn alpha() -> Self {
        GenFrac {
            num: NormalForm::epsilon(),
            den: NormalForm::from_rational(Rational::one()),
        }
    }

    pub fn num(&self) -> &NormalForm {
        &self.num
    }

    pub fn den(&self) -> &NormalForm {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `v(num) - v(den)`, `None` for zero.
    pub fn valuation(&self) -> Option<Rational> {
        let v = self.num.valuation()?;
        Some(v - self.den.valuation().expect("non-zero denominator"))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::precondition("inverse of zero"));
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    /// Parses `expr` or `(expr)/(expr)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let lead = text.len() - text.trim_start().len();
        let split = if t.starts_with('(') {
            matching_paren(t).and_then(|close| {
                let rest = t[close + 1..].trim_start();
                rest.strip_prefix('/').map(|den| (close, t.len() - den.len()))
            })
        } else {
            None
        };
        let shifted = |e: Error, by: usize| match e {
            Error::Parse { pos, msg } => Error::Parse { pos: pos + by, msg },
            other => other,
        };
        let (num, den) = match split {
            Some((close, den_at)) => {
                let num = parse_expression(&t[1..close]).map_err(|e| shifted(e, lead + 1))?;
                let den_text = &t[den_at..];
                let inner = den_text.trim();
                let den = if inner.starts_with('(') && matching_paren(inner) == Some(inner.len() - 1) {
                    let at = den_at + (den_text.len() - den_text.trim_start().len()) + 1;
                    parse_expression(&inner[1..inner.len() - 1]).map_err(|e| shifted(e, lead + at))?
                } else {
                    parse_expression(den_text).map_err(|e| shifted(e, lead + den_at))?
                };
                (num, den)
            }
            None => (
                parse_expression(t).map_err(|e| shifted(e, lead))?,
                NormalForm::from_rational(Rational::one()),
            ),
        };
        if den.is_zero() {
            return Err(Error::Parse {
                pos: lead,
                msg: "zero denominator".into(),
            });
        }
        Self::new(num, den).map_err(|e| Error::Parse {
            pos: lead,
            msg: e.to_string(),
        })
    }
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// The sharp norm restricted to `L`; multiplicative there.
pub fn frac_norm(p: &GenFrac) -> ValueNorm {
    ValueNorm::from_valuation(p.valuation())
}

impl PartialEq for GenFrac {
    fn eq(&self, other: &Self) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Add for &GenFrac {
    type Output = GenFrac;
    fn add(self, rhs: &GenFrac) -> GenFrac {
        if self.den == rhs.den {
            return GenFrac::normalized(&self.num + &rhs.num, self.den.clone());
        }
        GenFrac::normalized(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &GenFrac {
    type Output = GenFrac;
    fn sub(self, rhs: &GenFrac) -> GenFrac {
        self + &(-rhs)
    }
}

impl Neg for &GenFrac {
    type Output = GenFrac;
    fn neg(self) -> GenFrac {
        GenFrac {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &GenFrac {
    type Output = GenFrac;
    fn mul(self, rhs: &GenFrac) -> GenFrac {
        GenFrac::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl fmt::Display for GenFrac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == NormalForm::from_rational(Rational::one()) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// Which field operation [`frac_op`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracOp {
    Add,
    Mul,
    /// Inverse of the first operand; the second is ignored.
    Inv,
    /// Negation of the first operand; the second is ignored.
    Neg,
}

pub fn frac_op(kind: FracOp, p: &GenFrac, q: &GenFrac) -> Result<GenFrac> {
    match kind {
        FracOp::Add => Ok(p + q),
        FracOp::Mul => Ok(p * q),
        FracOp::Inv => p.inv(),
        FracOp::Neg => Ok(-p),
    }
}

/// A vector of `L^n` with the max norm.
#[derive(Clone, Debug, PartialEq)]
pub struct LVector {
    pub coords: Vec<GenFrac>,
}

impl LVector {
    pub fn new(coords: Vec<GenFrac>) -> Self {
        LVector { coords }
    }

    /// The `i`-th unit vector of `L^n` (0-based).
    pub fn unit(n: usize, i: usize) -> Self {
        LVector {
            coords: (0..n)
                .map(|j| if j == i { GenFrac::one() } else { GenFrac::zero() })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn scale(&self, lambda: &GenFrac) -> Self {
        LVector {
            coords: self.coords.iter().map(|c| lambda * c).collect(),
        }
    }

    pub fn sub(&self, other: &LVector) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(LVector {
            coords: self.coords.iter().zip(&other.coords).map(|(x, y)| x - y).collect(),
        })
    }

    pub fn add(&self, other: &LVector) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(LVector {
            coords: self.coords.iter().zip(&other.coords).map(|(x, y)| x + y).collect(),
        })
    }
}

impl fmt::Display for LVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{} vs {}", a, b)));
    }
    Ok(())
}

/// `‖x‖ = max_i |x_i|_e`.
pub fn vector_norm(x: &LVector) -> ValueNorm {
    x.coords.iter().map(frac_norm).max().unwrap_or(ValueNorm::Zero)
}

/// `φ(x) = Σ λ_i x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LFunctional {
    pub coeffs: Vec<GenFrac>,
}

impl LFunctional {
    pub fn new(coeffs: Vec<GenFrac>) -> Self {
        LFunctional { coeffs }
    }
}

pub fn functional_apply(phi: &LFunctional, x: &LVector) -> Result<GenFrac> {
    same_dim(phi.coeffs.len(), x.dim())?;
    Ok(phi
        .coeffs
        .iter()
        .zip(&x.coords)
        .fold(GenFrac::zero(), |acc, (l, c)| &acc + &(l * c)))
}

/// The dressed ball `B_{≤ r}(c)` of `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct HBBall {
    pub center: GenFrac,
    pub radius: ValueNorm,
}

impl HBBall {
    pub fn contains(&self, y: &GenFrac) -> bool {
        frac_norm(&(y - &self.center)) <= self.radius
    }

    /// `self ⊆ other`.
    pub fn inside(&self, other: &HBBall) -> bool {
        self.radius <= other.radius && other.contains(&self.center)
    }
}

impl fmt::Display for HBBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B(<= {}; {})", self.radius, self.center)
    }
}

/// The balls `B_x = B_{≤ ‖φ‖·‖x − a‖}(φ(x))` over the samples, with their
/// containment order.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily {
    pub balls: Vec<HBBall>,
    /// Sample indices (0-based) from the outermost to the innermost ball;
    /// ties keep sample order.
    pub order: Vec<usize>,
    /// Number of sample pairs whose balls were checked comparable.
    pub pairs_checked: usize,
}

impl BallFamily {
    /// Index of the first sample with minimal radius.
    pub fn minimal(&self) -> usize {
        let min = self.balls.iter().map(|b| &b.radius).min().expect("non-empty family");
        self.balls.iter().position(|b| &b.radius == min).unwrap()
    }
}

pub fn hb_ball_family(
    phi: &LFunctional,
    norm_bound: &ValueNorm,
    a: &LVector,
    samples: &[LVector],
) -> Result<BallFamily> {
    if samples.is_empty() {
        return Err(Error::precondition("at least one sample is needed"));
    }
    let mut balls = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        let value = functional_apply(phi, x)?;
        let bound = norm_bound * &vector_norm(x);
        if frac_norm(&value) > bound {
            return Err(Error::Extension {
                index: i,
                what: format!(
                    "sample {} has |phi(x)|_e = {} > {}",
                    x,
                    frac_norm(&value),
                    bound
                ),
            });
        }
        let dist = vector_norm(&x.sub(a)?);
        if dist.is_zero() {
            return Err(Error::precondition(format!(
                "sample {} coincides with the extension direction",
                i
            )));
        }
        balls.push(HBBall {
            center: value,
            radius: norm_bound * &dist,
        });
    }
    let mut pairs_checked = 0;
    for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            let d = frac_norm(&(&balls[i].center - &balls[j].center));
            let r = std::cmp::max(&balls[i].radius, &balls[j].radius);
            if &d > r {
                return Err(Error::Extension {
                    index: j,
                    what: format!(
                        "balls of samples {} and {} are not comparable: distance {} > {}",
                        i, j, d, r
                    ),
                });
            }
            pairs_checked += 1;
        }
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&i, &j| balls[j].radius.cmp(&balls[i].radius));
    Ok(BallFamily {
        balls,
        order,
        pairs_checked,
    })
}

/// A test vector `z − λa` of the extended space.
#[derive(Clone, Debug, PartialEq)]
pub struct TestVector {
    pub z: LVector,
    pub lambda: GenFrac,
}

/// Outcome of a verified extension step.
#[derive(Clone, Debug, PartialEq)]
pub struct Extension {
    /// `ψ(a)`.
    pub alpha: GenFrac,
    /// Sample whose ball is minimal (0-based).
    pub minimal: usize,
    pub family: BallFamily,
    /// Number of test vectors satisfying `|ψ(z − λa)|_e ≤ ‖φ‖·‖z − λa‖`.
    pub tests_passed: usize,
}

/// `ψ(v + λa) := φ(v) + λ·alpha` with `alpha` the center of the smallest
/// sample ball, checked on every test vector.
pub fn hb_extend(
    phi: &LFunctional,
    norm_bound: &ValueNorm,
    a: &LVector,
    samples: &[LVector],
    tests: &[TestVector],
) -> Result<Extension> {
    let family = hb_ball_family(phi, norm_bound, a, samples)?;
    let minimal = family.minimal();
    let alpha = family.balls[minimal].center.clone();
    if let Some(i) = family.balls.iter().position(|b| !b.contains(&alpha)) {
        return Err(Error::Extension {
            index: i,
            what: format!("alpha = {} lies outside sample ball {}", alpha, i),
        });
    }
    for (i, t) in tests.iter().enumerate() {
        let psi = &functional_apply(phi, &t.z)? - &(&t.lambda * &alpha);
        let v = t.z.sub(&a.scale(&t.lambda))?;
        let rhs = norm_bound * &vector_norm(&v);
        if frac_norm(&psi) > rhs {
            return Err(Error::Extension {
                index: i,
                what: format!(
                    "|psi(z - lambda a)|_e = {} > {} for z = {}, lambda = {}",
                    frac_norm(&psi),
                    rhs,
                    t.z,
                    t.lambda
                ),
            });
        }
    }
    Ok(Extension {
        alpha,
        minimal,
        family,
        tests_passed: tests.len(),
    })
}

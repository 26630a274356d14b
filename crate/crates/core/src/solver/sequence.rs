use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::algebra::NormalForm;
use crate::error::{Error, Result};
use crate::geometry::{ball_relation, BallRelation, DressedBall};
use crate::rational::{fmt_rational, int, Rational};

/// A rational function of the ball index `i >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexFormula {
    /// `slope · i + offset`
    Affine { slope: Rational, offset: Rational },
    /// `limit - scale / i`
    Harmonic { limit: Rational, scale: Rational },
}

impl IndexFormula {
    pub fn at(&self, i: usize) -> Rational {
        let i = Rational::from_integer(BigInt::from(i));
        match self {
            IndexFormula::Affine { slope, offset } => slope * i + offset,
            IndexFormula::Harmonic { limit, scale } => limit - scale / i,
        }
    }
}

impl fmt::Display for IndexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexFormula::Affine { slope, offset } => {
                write!(f, "{}*i + {}", fmt_rational(slope), fmt_rational(offset))
            }
            IndexFormula::Harmonic { limit, scale } => {
                write!(f, "{} - {}/i", fmt_rational(limit), fmt_rational(scale))
            }
        }
    }
}

/// A sequence of dressed balls, finite or generated by a rule.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum NestedBallSequence {
    Explicit(Vec<DressedBall>),
    /// `center_i = Σ_{j <= i} coeff · ε^{exponent(j)}`, `rho_i = rho(i)`.
    Rule {
        coeff: Rational,
        exponent: IndexFormula,
        rho: IndexFormula,
    },
}

impl NestedBallSequence {
    /// `x_i = Σ_{j <= i} ε^j`, `ρ_i = i + 1`.
    pub fn geometric() -> Self {
        NestedBallSequence::Rule {
            coeff: Rational::one(),
            exponent: IndexFormula::Affine {
                slope: int(1),
                offset: int(0),
            },
            rho: IndexFormula::Affine {
                slope: int(1),
                offset: int(1),
            },
        }
    }

    /// `x_i = Σ_{j <= i} ε^{1 - 1/j}`, `ρ_i = 1 - 1/i`: radii decrease to
    /// `e^{-1}` without reaching it.
    pub fn dense() -> Self {
        let h = IndexFormula::Harmonic {
            limit: int(1),
            scale: int(1),
        };
        NestedBallSequence::Rule {
            coeff: Rational::one(),
            exponent: h.clone(),
            rho: h,
        }
    }

    /// Number of balls, `None` when the rule is infinite.
    pub fn len(&self) -> Option<usize> {
        match self {
            NestedBallSequence::Explicit(b) => Some(b.len()),
            NestedBallSequence::Rule { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// The first `n` balls (at most `n`, for a shorter explicit list).
    pub fn truncate(&self, n: usize) -> Self {
        NestedBallSequence::Explicit(self.cursor().take(n).collect())
    }

    pub fn cursor(&self) -> BallCursor {
        BallCursor {
            seq: self.clone(),
            next: 1,
            partial: NormalForm::zero(),
        }
    }

    /// The first `n` balls; fails if the sequence is shorter.
    pub fn balls(&self, n: usize) -> Result<Vec<DressedBall>> {
        let balls: Vec<DressedBall> = self.cursor().take(n).collect();
        if balls.len() < n {
            return Err(Error::precondition(format!(
                "sequence has only {} balls, {} requested",
                balls.len(),
                n
            )));
        }
        Ok(balls)
    }
}

/// Incremental generator over a [`NestedBallSequence`].
#[derive(Clone, Debug)]
pub struct BallCursor {
    seq: NestedBallSequence,
    next: usize,
    partial: NormalForm,
}

impl Iterator for BallCursor {
    type Item = DressedBall;

    fn next(&mut self) -> Option<DressedBall> {
        let i = self.next;
        let ball = match &self.seq {
            NestedBallSequence::Explicit(b) => b.get(i - 1)?.clone(),
            NestedBallSequence::Rule {
                coeff,
                exponent,
                rho,
            } => {
                let term = NormalForm::monomial(coeff.clone(), exponent.at(i));
                self.partial = &self.partial + &term;
                DressedBall::new(self.partial.clone(), rho.at(i))
            }
        };
        self.next += 1;
        Some(ball)
    }
}

/// Checks that `b2` may follow `b1` in a nested sequence; `index` is the
/// 1-based position of `b2`.
pub(crate) fn check_step(b1: &DressedBall, b2: &DressedBall, index: usize) -> Result<()> {
    if b2.rho < b1.rho {
        return Err(Error::NotNested {
            index,
            what: format!(
                "radius grows: rho {} < {}",
                fmt_rational(&b2.rho),
                fmt_rational(&b1.rho)
            ),
        });
    }
    match ball_relation(b1, b2) {
        BallRelation::SecondInsideFirst | BallRelation::Equal => Ok(()),
        rel => Err(Error::NotNested {
            index,
            what: format!("ball {} is {} relative to ball {}", index, rel, index - 1),
        }),
    }
}

/// Validates radii monotonicity and consecutive containment for the first
/// `n` balls, reporting the first offending index.
pub fn check_nested(seq: &NestedBallSequence, n: usize) -> Result<()> {
    let mut prev: Option<DressedBall> = None;
    for (i, b) in seq.cursor().take(n).enumerate() {
        if let Some(p) = &prev {
            check_step(p, &b, i + 1)?;
        }
        prev = Some(b);
    }
    Ok(())
}

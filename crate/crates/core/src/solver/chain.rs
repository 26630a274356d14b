use rayon::prelude::*;

use super::align::{align_center, apply_reset, containment_threshold, nested_at, AlignCase};
use super::sequence::{check_nested, check_step, BallCursor, NestedBallSequence};
use crate::algebra::{distance, GridIndex, NormalForm, Representative, ValueNorm};
use crate::error::{Error, Result};
use crate::geometry::{
    check_condition_e, CNet, ConditionECertificate, DressedBall, EuclideanModel,
};
use crate::rational::fmt_rational;

/// Per-stage record of how a model was obtained.
#[derive(Clone, Debug)]
pub struct Stage {
    /// 1-based index of the ball in the input sequence.
    pub ball: usize,
    pub case: Option<AlignCase>,
    /// Reset threshold against the previous model (`1` means no reset).
    pub k0: GridIndex,
    pub structural_threshold: bool,
    pub certificate: ConditionECertificate,
}

/// Consecutive euclidean models nested at every grid index.
#[derive(Clone, Debug)]
pub struct ProperModelChain {
    pub models: Vec<EuclideanModel>,
    pub stages: Vec<Stage>,
}

/// First `(stage, k)` violating the chain invariants; stages are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainViolation {
    pub stage: usize,
    pub k: GridIndex,
}

impl ProperModelChain {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Checks componentwise nesting and half-radius containment of
    /// consecutive models on `1..=window`.
    pub fn verify(&self, window: GridIndex) -> std::result::Result<usize, ChainViolation> {
        let mut checked = 0;
        for (i, pair) in self.models.windows(2).enumerate() {
            let (m1, m2) = (&pair[0], &pair[1]);
            let bad = (1..=window).into_par_iter().find_first(|&k| {
                !nested_at(m1, m2, k) || !m1.member_with_margin_at(m2.center(), k)
            });
            if let Some(k) = bad {
                return Err(ChainViolation { stage: i + 1, k });
            }
            checked += 2 * window as usize;
        }
        Ok(checked)
    }
}

/// Incremental construction of a proper model chain.
///
/// Balls with a radius equal to their predecessor's are skipped; the builder
/// keeps the map from input positions to chain stages.
pub struct ChainBuilder {
    cursor: BallCursor,
    consumed: usize,
    exhausted: bool,
    balls: Vec<DressedBall>,
    /// chain stage (0-based) of each consumed input ball
    stage_of: Vec<usize>,
    /// input position (1-based) of each chain stage
    origin: Vec<usize>,
    models: Vec<EuclideanModel>,
    stages: Vec<Stage>,
    next_rep: Option<Representative>,
    window: GridIndex,
}

impl ChainBuilder {
    pub fn new(seq: NestedBallSequence, window: GridIndex) -> Self {
        ChainBuilder {
            cursor: seq.cursor(),
            consumed: 0,
            exhausted: false,
            balls: Vec::new(),
            stage_of: Vec::new(),
            origin: Vec::new(),
            models: Vec::new(),
            stages: Vec::new(),
            next_rep: None,
            window,
        }
    }

    pub fn window(&self) -> GridIndex {
        self.window
    }

    /// Pulls input balls until `count` distinct radii are known or the input
    /// ends.
    fn fetch(&mut self, count: usize) -> Result<()> {
        while self.balls.len() < count && !self.exhausted {
            let b = match self.cursor.next() {
                Some(b) => b,
                None => {
                    self.exhausted = true;
                    break;
                }
            };
            self.consumed += 1;
            let index = self.consumed;
            if let Some(prev) = self.balls.last() {
                check_step(prev, &b, index)?;
                if b.rho == prev.rho {
                    self.stage_of.push(self.balls.len() - 1);
                    continue;
                }
            }
            self.stage_of.push(self.balls.len());
            self.origin.push(index);
            self.balls.push(b);
        }
        Ok(())
    }

    /// Chain stage of the input ball at 1-based position `i`.
    pub fn stage_of(&mut self, i: usize) -> Result<usize> {
        while self.consumed < i && !self.exhausted {
            let want = self.balls.len() + 1;
            self.fetch(want)?;
        }
        self.stage_of.get(i - 1).copied().ok_or_else(|| {
            Error::precondition(format!("sequence has fewer than {} balls", i))
        })
    }

    pub fn models(&self) -> &[EuclideanModel] {
        &self.models
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Builds models until there are `n`, or the input runs out.
    pub fn extend_to(&mut self, n: usize) -> Result<usize> {
        while self.models.len() < n {
            let j = self.models.len();
            self.fetch(j + 2)?;
            if j >= self.balls.len() {
                break;
            }
            self.push_stage(j).map_err(|e| at_ball(e, self.origin[j]))?;
        }
        Ok(self.models.len())
    }

    fn push_stage(&mut self, j: usize) -> Result<()> {
        let window = self.window;
        let ball = &self.balls[j];
        let rep = match self.next_rep.take() {
            Some(r) => r,
            None => Representative::canonical(ball.center.clone()),
        };
        let probe = EuclideanModel::from_parts(rep.clone(), ball.rho.clone(), CNet::one());
        let (c_hat, next_rep, case) = match self.balls.get(j + 1) {
            Some(next) => {
                let a = align_center(&probe, &next.center, &next.rho, window)?;
                (a.cnet, Some(a.representative), Some(a.case))
            }
            None => (CNet::one(), None, None),
        };
        let m_hat = EuclideanModel::from_parts(rep, ball.rho.clone(), c_hat);
        let (model, next_rep, k0, structural, certificate) = match self.models.last() {
            None => {
                let cert = check_condition_e(m_hat.cnet(), window)?;
                (m_hat, next_rep, 1, true, cert)
            }
            Some(prev) => {
                let t = containment_threshold(prev, &m_hat, window)?;
                let (m, r, cert) = apply_reset(prev, &m_hat, next_rep.as_ref(), t.k0, window)?;
                (m, r, t.k0, t.structural, cert)
            }
        };
        self.models.push(model);
        self.stages.push(Stage {
            ball: self.origin[j],
            case,
            k0,
            structural_threshold: structural,
            certificate,
        });
        self.next_rep = next_rep;
        Ok(())
    }

    pub fn into_chain(self) -> ProperModelChain {
        ProperModelChain {
            models: self.models,
            stages: self.stages,
        }
    }
}

fn at_ball(e: Error, ball: usize) -> Error {
    match e {
        Error::Verification { ball: None, k, what } => Error::Verification {
            ball: Some(ball),
            k,
            what,
        },
        Error::ConditionE(f) => Error::Verification {
            ball: Some(ball),
            k: 0,
            what: format!("condition (E) fails: {}", f),
        },
        other => other,
    }
}

/// Proper models for the first `n` balls of `seq`, verified on `1..=window`.
pub fn build_proper_models(
    seq: &NestedBallSequence,
    n: usize,
    window: GridIndex,
) -> Result<ProperModelChain> {
    check_nested(seq, n)?;
    let mut b = ChainBuilder::new(seq.truncate(n), window);
    b.extend_to(n)?;
    let chain = b.into_chain();
    chain.verify(window).map_err(|v| Error::Verification {
        ball: Some(chain.stages[v.stage - 1].ball),
        k: v.k,
        what: "proper chain invariant".into(),
    })?;
    Ok(chain)
}

/// A point of the first `n` balls with the evidence for each ball.
#[derive(Clone, Debug)]
pub struct PrefixWitness {
    pub witness: NormalForm,
    /// `|x - x_i|_e` for `i = 1..=n`.
    pub distances: Vec<ValueNorm>,
    pub chain: ProperModelChain,
}

/// The class of the last model's center, checked to lie in each of the first
/// `n` balls by exact valuation.
pub fn intersect_prefix(
    seq: &NestedBallSequence,
    n: usize,
    window: GridIndex,
) -> Result<PrefixWitness> {
    let chain = build_proper_models(seq, n, window)?;
    let witness = chain
        .models
        .last()
        .ok_or_else(|| Error::precondition("empty sequence"))?
        .center()
        .class_of()
        .clone();
    let mut distances = Vec::with_capacity(n);
    for (i, b) in seq.balls(n)?.iter().enumerate() {
        let d = distance(&witness, &b.center);
        if d > b.radius() {
            return Err(Error::NotNested {
                index: i + 1,
                what: format!(
                    "witness at distance {} exceeds radius e^-{}",
                    d,
                    fmt_rational(&b.rho)
                ),
            });
        }
        distances.push(d);
    }
    Ok(PrefixWitness {
        witness,
        distances,
        chain,
    })
}

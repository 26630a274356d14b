use std::cmp::Ordering;
use std::sync::Mutex;

use rayon::prelude::*;

use super::chain::ChainBuilder;
use super::sequence::NestedBallSequence;
use crate::algebra::{ExactReal, GridIndex};
use crate::error::{Error, Result};

/// The diagonal net `x_k := x^{(k)}_k` through a lazily extended proper
/// model chain.
pub struct LazyWitness {
    builder: Mutex<ChainBuilder>,
}

/// Evidence that the diagonal lies in one ball of the sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessCertificate {
    /// 1-based position of the ball in the input sequence.
    pub ball: usize,
    /// Chain stage modeling that ball (1-based).
    pub stage: usize,
    /// `x_k` was checked to lie in the stage's pointwise ball for
    /// `k` in `from..=window`.
    pub from: GridIndex,
    pub window: GridIndex,
    pub checked: usize,
}

/// Lazy intersection witness for an (infinite) nested sequence; chain
/// invariants are verified on `1..=window` as stages are added.
pub fn intersect_diagonal(seq: NestedBallSequence, window: GridIndex) -> LazyWitness {
    LazyWitness {
        builder: Mutex::new(ChainBuilder::new(seq, window)),
    }
}

impl LazyWitness {
    fn ensure_depth(&self, depth: usize) -> Result<()> {
        let mut b = self.builder.lock().unwrap();
        let got = b.extend_to(depth)?;
        if got < depth {
            return Err(Error::precondition(format!(
                "sequence supports only {} chain stages, {} needed",
                got, depth
            )));
        }
        Ok(())
    }

    /// Number of chain stages built so far.
    pub fn depth(&self) -> usize {
        self.builder.lock().unwrap().models().len()
    }

    /// `x_k`, the center of the `k`-th model evaluated at `k`.
    pub fn value_at(&self, k: GridIndex) -> Result<ExactReal> {
        self.ensure_depth(k as usize)?;
        let b = self.builder.lock().unwrap();
        Ok(b.models()[k as usize - 1].center().value_at(k))
    }

    /// Checks `x_k` against the pointwise balls of the stage modeling input
    /// ball `i`, for every `k` from that stage's index up to `window`.
    ///
    /// Beyond the window membership follows from chain nesting, and below the
    /// stage index only finitely many indices are excluded, so the witness
    /// class lies in the dressed ball `i`.
    pub fn certify(&self, i: usize, window: GridIndex) -> Result<WitnessCertificate> {
        if i == 0 {
            return Err(Error::precondition("ball indices start at 1"));
        }
        self.ensure_depth(window as usize)?;
        let b = {
            let mut guard = self.builder.lock().unwrap();
            let stage = guard.stage_of(i)?;
            (stage, guard.models().to_vec())
        };
        let (stage, models) = b;
        let model = &models[stage];
        let from = stage as GridIndex + 1;
        let bad = (from..=window).into_par_iter().find_first(|&k| {
            let x = models[k as usize - 1].center().value_at(k);
            let offset = (&x - &model.center().value_at(k)).abs();
            offset.cmp_exact(&model.radius_at(k)) == Ordering::Greater
        });
        if let Some(k) = bad {
            return Err(Error::verification(Some(i), k, "diagonal outside model ball"));
        }
        Ok(WitnessCertificate {
            ball: i,
            stage: stage + 1,
            from,
            window,
            checked: (window + 1).saturating_sub(from) as usize,
        })
    }
}

use std::cmp::Ordering;
use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;

use super::cnet::CNet;
use crate::algebra::GridIndex;
use crate::error::{ConditionEFailure, Error, Result};
use crate::rational::{fmt_rational, Rational};

/// How monotonicity of a net was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotoneEvidence {
    /// Follows from the constructors for every index.
    Structural,
    /// Checked exactly on `1..=K` only.
    PrefixOnly,
}

/// Proof object for condition (E) of a scaling net.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionECertificate {
    /// Positivity was checked exactly for `k <= window`.
    pub window: GridIndex,
    pub monotone: MonotoneEvidence,
    /// Leading exponent of every residue branch modulo `modulus`; the
    /// minimum is the valuation `0`.
    pub modulus: u32,
    pub leading: Vec<Rational>,
}

impl fmt::Display for ConditionECertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let leading: Vec<String> = self.leading.iter().map(fmt_rational).collect();
        write!(
            f,
            "positive on 1..={} and eventually; monotone {}; leading exponents mod {}: [{}]",
            self.window,
            match self.monotone {
                MonotoneEvidence::Structural => "structural",
                MonotoneEvidence::PrefixOnly => "prefix-only",
            },
            self.modulus,
            leading.join(", ")
        )
    }
}

/// First index in `from..=to` where `ok` fails, scanning in parallel.
///
/// The reported index does not depend on the schedule.
pub fn first_failure(
    from: GridIndex,
    to: GridIndex,
    ok: impl Fn(GridIndex) -> bool + Sync,
) -> Option<GridIndex> {
    if from > to {
        return None;
    }
    (from..=to).into_par_iter().find_first(|&k| !ok(k))
}

/// Certifies that `c` is positive, non-decreasing in `k` and of valuation 0.
pub fn check_condition_e(c: &CNet, window: GridIndex) -> Result<ConditionECertificate> {
    let fail = |f| Err(Error::ConditionE(f));
    // evaluate in order so envelope memos fill incrementally
    for k in 1..=window {
        if c.eval(k).signum() != Ordering::Greater {
            return fail(ConditionEFailure::Positivity(k));
        }
    }
    let profile = c.profile();
    let structural = c.structurally_monotone();
    if !structural {
        if let Some(k) = profile.first_vanishing_index(window + 1) {
            return fail(ConditionEFailure::Positivity(k));
        }
    }
    let monotone = if structural {
        MonotoneEvidence::Structural
    } else {
        if let Some(k) = first_failure(2, window, |k| {
            c.eval(k).cmp_exact(&c.eval(k - 1)) != Ordering::Less
        }) {
            return fail(ConditionEFailure::Monotonicity(k));
        }
        MonotoneEvidence::PrefixOnly
    };
    let v = profile.valuation();
    if v != Some(Rational::zero()) {
        return fail(ConditionEFailure::Valuation(v));
    }
    Ok(ConditionECertificate {
        window,
        monotone,
        modulus: profile.modulus,
        leading: profile
            .lead
            .into_iter()
            .map(|a| a.expect("positive nets have no vanishing branch"))
            .collect(),
    })
}

/// `k ↦ max_{j <= k} max(1, C_j)`.
pub fn monotone_envelope(c: CNet) -> CNet {
    CNet::envelope(CNet::max(CNet::one(), c))
}

use std::cmp::Ordering;

use num_traits::Signed;

use crate::algebra::{ExactReal, GridIndex, NormalForm, Representative};
use crate::error::{Error, Result};
use crate::geometry::{
    check_condition_e, diff_bound, first_failure, monotone_envelope, scaled, structural_threshold,
    CNet, ConditionECertificate, DressedBall, EuclideanModel,
};
use crate::rational::{fmt_rational, rat, Rational};

/// Which branch of the alignment construction applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignCase {
    /// The next center lies on the sphere of the current ball.
    Sphere,
    /// The next center lies strictly inside.
    Interior,
}

#[derive(Clone, Debug)]
pub struct Alignment {
    pub cnet: CNet,
    pub representative: Representative,
    pub case: AlignCase,
    /// Indices below this bound copy the current center.
    pub patched_below: GridIndex,
    pub certificate: ConditionECertificate,
}

/// Chooses a scaling for `m1` and a representative of `x2` with
/// `|x2_k - x1_k| <= (C_k/2) 2^{-k rho1}` at every index.
///
/// Only the center and radius of `m1` are used.
pub fn align_center(
    m1: &EuclideanModel,
    x2: &NormalForm,
    rho2: &Rational,
    window: GridIndex,
) -> Result<Alignment> {
    let rho1 = m1.rho();
    let outer = m1.ball();
    let inner = DressedBall::new(x2.clone(), rho2.clone());
    if rho2 <= rho1 || !outer.includes(&inner) {
        return Err(Error::precondition(format!(
            "ball ({}, e^-{}) is not strictly nested in ({}, e^-{})",
            x2,
            fmt_rational(rho2),
            outer.center,
            fmt_rational(rho1)
        )));
    }
    let rep1 = m1.center();
    let canonical = Representative::canonical(x2.clone());
    let (cnet, representative, case, patched_below) = if outer.on_sphere(x2) {
        let normalized = CNet::prod(
            CNet::abs_diff(rep1.clone(), canonical.clone()),
            CNet::power(-rho1.clone()),
        );
        let c = CNet::scale(rat(2, 1), monotone_envelope(normalized))?;
        (c, canonical, AlignCase::Sphere, 1)
    } else {
        let probe = EuclideanModel::from_parts(rep1.clone(), rho1.clone(), CNet::one());
        let bound = diff_bound(&canonical, rep1);
        let threshold = match &bound.valuation {
            None => bound.from,
            Some(v) => {
                let delta = v - rho1;
                let coeff = &bound.coeff * rat(2, 1);
                structural_threshold(bound.from, |t| {
                    ExactReal::scaled_pow2(&coeff, &scaled(&delta, t))
                        .cmp_exact(&ExactReal::from_rational(rat(1, 1)))
                        != Ordering::Greater
                })
            }
        };
        let last_bad = (1..threshold)
            .rev()
            .find(|&k| !probe.member_with_margin_at(&canonical, k));
        match last_bad {
            None => (CNet::one(), canonical, AlignCase::Interior, 1),
            Some(k) => (
                CNet::one(),
                canonical.patch_below(k + 1, rep1),
                AlignCase::Interior,
                k + 1,
            ),
        }
    };
    let aligned = EuclideanModel::from_parts(rep1.clone(), rho1.clone(), cnet.clone());
    if let Some(k) = first_failure(1, window, |k| aligned.member_with_margin_at(&representative, k)) {
        return Err(Error::verification(None, k, "half-radius alignment"));
    }
    let certificate = check_condition_e(&cnet, window)?;
    Ok(Alignment {
        cnet,
        representative,
        case,
        patched_below,
        certificate,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threshold {
    /// `C2_k 2^{-k rho2} <= (C1_k / 2) 2^{-k rho1}` for every `k >= k0`.
    pub k0: GridIndex,
    /// Whether the tail beyond the exact scan follows from the majorant of
    /// `C2` and monotonicity of `C1`; otherwise `k0` is minimal over the
    /// window only.
    pub structural: bool,
}

fn fits_inside_half(m1: &EuclideanModel, m2: &EuclideanModel, k: GridIndex) -> bool {
    let half = m1.radius_at(k).scale(&rat(1, 2));
    m2.radius_at(k).cmp_exact(&half) != Ordering::Greater
}

/// The index from which the pointwise radius of `m2` is at most half that
/// of `m1`.
pub fn containment_threshold(
    m1: &EuclideanModel,
    m2: &EuclideanModel,
    window: GridIndex,
) -> Result<Threshold> {
    let delta = m2.rho() - m1.rho();
    if !delta.is_positive() {
        return Err(Error::precondition(format!(
            "containment threshold needs rho2 > rho1, got {} and {}",
            fmt_rational(m2.rho()),
            fmt_rational(m1.rho())
        )));
    }
    let maj = m2.cnet().majorant();
    let decay = maj.exponent.as_ref().map(|a| a + &delta);
    let structural = m1.cnet().structurally_monotone()
        && decay.as_ref().is_none_or(|d| d.is_positive());
    let top = if structural {
        match &decay {
            None => maj.from,
            Some(d) => {
                let coeff = &maj.coeff * rat(2, 1);
                structural_threshold(maj.from, |t| {
                    ExactReal::scaled_pow2(&coeff, &scaled(d, t)).cmp_exact(&m1.cnet().eval(t))
                        != Ordering::Greater
                })
            }
        }
    } else {
        window + 1
    };
    let last_bad = (1..top).rev().find(|&k| !fits_inside_half(m1, m2, k));
    Ok(Threshold {
        k0: last_bad.map_or(1, |k| k + 1),
        structural,
    })
}

/// The reset rule: below `k0` the scaling of `m2` is capped by half of the
/// outer radius and the next center copies `m2`'s center.
///
/// Returns the final second model and the adjusted next representative.
/// Verifies nesting, half-radius containment of the next center and
/// condition (E) on `1..=window`.
pub fn apply_reset(
    m1: &EuclideanModel,
    m2: &EuclideanModel,
    rep3: Option<&Representative>,
    k0: GridIndex,
    window: GridIndex,
) -> Result<(EuclideanModel, Option<Representative>, ConditionECertificate)> {
    let (cnet, rep3) = if k0 <= 1 {
        (m2.cnet().clone(), rep3.cloned())
    } else {
        let capped = CNet::scale(
            rat(1, 2),
            CNet::prod(m1.cnet().clone(), CNet::power(m1.rho() - m2.rho())),
        )?;
        let before = CNet::min(capped, m2.cnet().clone());
        (
            CNet::switch(k0, before, m2.cnet().clone()),
            rep3.map(|r| r.patch_below(k0, m2.center())),
        )
    };
    let m2 = EuclideanModel::from_parts(m2.center().clone(), m2.rho().clone(), cnet);
    if let Some(k) = first_failure(1, window, |k| nested_at(m1, &m2, k)) {
        return Err(Error::verification(None, k, "pointwise nesting"));
    }
    if let Some(r) = &rep3 {
        if let Some(k) = first_failure(1, window, |k| m2.member_with_margin_at(r, k)) {
            return Err(Error::verification(None, k, "half-radius containment of next center"));
        }
    }
    let certificate = check_condition_e(m2.cnet(), window)?;
    Ok((m2, rep3, certificate))
}

/// `B^{(2)}_k ⊆ B^{(1)}_k`, i.e. `|x2_k - x1_k| + R2_k <= R1_k`.
pub fn nested_at(m1: &EuclideanModel, m2: &EuclideanModel, k: GridIndex) -> bool {
    let lhs = &m1.offset_at(m2.center(), k) + &m2.radius_at(k);
    lhs.cmp_exact(&m1.radius_at(k)) != Ordering::Greater
}

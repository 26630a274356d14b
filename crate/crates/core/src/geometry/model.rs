use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::cnet::CNet;
use super::condition::{check_condition_e, first_failure, monotone_envelope, ConditionECertificate};
use crate::algebra::{
    distance, ExactReal, GridIndex, Mask, NormalForm, Representative, Term, ValueNorm,
};
use crate::error::{Error, Result};
use crate::rational::{fmt_rational, Rational};

/// The closed sharp ball `{ y : |y - center|_e <= e^{-rho} }`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedBall {
    pub center: NormalForm,
    pub rho: Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallRelation {
    Disjoint,
    SecondInsideFirst,
    FirstInsideSecond,
    Equal,
}

impl fmt::Display for BallRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BallRelation::Disjoint => "disjoint",
            BallRelation::SecondInsideFirst => "b2_inside_b1",
            BallRelation::FirstInsideSecond => "b1_inside_b2",
            BallRelation::Equal => "equal",
        })
    }
}

impl DressedBall {
    pub fn new(center: NormalForm, rho: Rational) -> Self {
        DressedBall { center, rho }
    }

    pub fn radius(&self) -> ValueNorm {
        ValueNorm::ExpNeg(self.rho.clone())
    }

    pub fn contains(&self, y: &NormalForm) -> bool {
        distance(y, &self.center) <= self.radius()
    }

    /// Membership in the open ball of the same radius.
    pub fn strictly_contains(&self, y: &NormalForm) -> bool {
        distance(y, &self.center) < self.radius()
    }

    /// Membership in the sphere of the same radius.
    pub fn on_sphere(&self, y: &NormalForm) -> bool {
        distance(y, &self.center) == self.radius()
    }

    /// Whether `other` is a subset of this ball.
    pub fn includes(&self, other: &DressedBall) -> bool {
        other.rho >= self.rho && self.contains(&other.center)
    }
}

impl fmt::Display for DressedBall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B(<= {}; {})", self.radius(), self.center)
    }
}

pub fn ball_relation(b1: &DressedBall, b2: &DressedBall) -> BallRelation {
    match (b1.includes(b2), b2.includes(b1)) {
        (true, true) => BallRelation::Equal,
        (true, false) => BallRelation::SecondInsideFirst,
        (false, true) => BallRelation::FirstInsideSecond,
        (false, false) => BallRelation::Disjoint,
    }
}

/// Pointwise balls `B_k = B_{<= C_k 2^{-k rho}}(x_k)` modeling a dressed ball.
#[derive(Clone, Debug)]
pub struct EuclideanModel {
    center: Representative,
    rho: Rational,
    cnet: CNet,
}

impl EuclideanModel {
    /// Builds a model after certifying condition (E) on `1..=window`.
    pub fn new(
        center: Representative,
        rho: Rational,
        cnet: CNet,
        window: GridIndex,
    ) -> Result<(Self, ConditionECertificate)> {
        let cert = check_condition_e(&cnet, window)?;
        Ok((Self::from_parts(center, rho, cnet), cert))
    }

    pub(crate) fn from_parts(center: Representative, rho: Rational, cnet: CNet) -> Self {
        EuclideanModel { center, rho, cnet }
    }

    pub fn center(&self) -> &Representative {
        &self.center
    }

    pub fn rho(&self) -> &Rational {
        &self.rho
    }

    pub fn cnet(&self) -> &CNet {
        &self.cnet
    }

    pub fn ball(&self) -> DressedBall {
        DressedBall::new(self.center.class_of().clone(), self.rho.clone())
    }

    /// `C_k · 2^{-k rho}`.
    pub fn radius_at(&self, k: GridIndex) -> ExactReal {
        self.cnet.eval(k).mul_pow2(&scaled(&self.rho, k))
    }

    /// `|r_k - x_k|`.
    pub fn offset_at(&self, r: &Representative, k: GridIndex) -> ExactReal {
        (&r.value_at(k) - &self.center.value_at(k)).abs()
    }

    pub fn member_at(&self, r: &Representative, k: GridIndex) -> bool {
        self.offset_at(r, k).cmp_exact(&self.radius_at(k)) != Ordering::Greater
    }

    /// Whether `r_k` lies in `B_k` with distance at least `(C_k/2) 2^{-k rho}`
    /// to the boundary.
    pub fn member_with_margin_at(&self, r: &Representative, k: GridIndex) -> bool {
        let half = self.radius_at(k).scale(&Rational::new(1.into(), 2.into()));
        self.offset_at(r, k).cmp_exact(&half) != Ordering::Greater
    }
}

pub(crate) fn scaled(rho: &Rational, k: GridIndex) -> Rational {
    rho * Rational::from_integer(BigInt::from(k))
}

pub fn model_member_at(m: &EuclideanModel, r: &Representative, k: GridIndex) -> bool {
    m.member_at(r, k)
}

/// The model with `C = 1` centered at `rep`.
pub fn default_model(b: &DressedBall, rep: Representative) -> Result<EuclideanModel> {
    if rep.class_of() != &b.center {
        return Err(Error::precondition(format!(
            "representative of {} does not belong to center {}",
            rep.class_of(),
            b.center
        )));
    }
    Ok(EuclideanModel::from_parts(rep, b.rho.clone(), CNet::one()))
}

/// Least `T >= from` with `bound(T) <= target(T)`, for a predicate that stays
/// true once it holds.
pub(crate) fn structural_threshold(
    from: GridIndex,
    holds: impl Fn(GridIndex) -> bool,
) -> GridIndex {
    if holds(from) {
        return from;
    }
    let mut lo = from;
    let mut hi = from.max(1).saturating_mul(2);
    while !holds(hi) {
        lo = hi;
        hi = hi.checked_mul(2).expect("threshold search overflow");
    }
    // holds(hi), !holds(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Tail bound `|r_k - x_k| <= A 2^{-k v}` for two representatives, valid for
/// `k >= from`; `None` when the classes agree.
pub(crate) struct DiffBound {
    pub coeff: Rational,
    pub valuation: Option<Rational>,
    pub from: GridIndex,
}

pub(crate) fn diff_bound(r: &Representative, x: &Representative) -> DiffBound {
    let d = r.class_of() - x.class_of();
    DiffBound {
        coeff: d.abs_coeff_sum(),
        valuation: d.valuation(),
        from: r
            .max_patch_key()
            .max(x.max_patch_key())
            .map_or(1, |k| k + 1),
    }
}

/// Result of [`capture_representative`].
#[derive(Clone, Debug)]
pub struct Capture {
    pub representative: Representative,
    /// Membership beyond this index follows from leading exponents and the
    /// monotonicity of `C`.
    pub threshold: GridIndex,
    /// Indices overridden by the center's values.
    pub patched_below: GridIndex,
}

/// A representative of `y` lying in every pointwise ball of `m`.
///
/// Below a threshold where the leading-exponent bound takes over, `y_k` is
/// replaced by the center's value from the last failing index down.
pub fn capture_representative(m: &EuclideanModel, y: &NormalForm) -> Result<Capture> {
    let ball = m.ball();
    if !ball.strictly_contains(y) {
        return Err(Error::precondition(format!(
            "{} is not in the open ball of radius e^-{} around {}",
            y,
            fmt_rational(&m.rho),
            ball.center
        )));
    }
    let canonical = Representative::canonical(y.clone());
    let bound = diff_bound(&canonical, &m.center);
    let threshold = match &bound.valuation {
        None => bound.from,
        Some(v) => {
            let delta = v - &m.rho;
            structural_threshold(bound.from, |t| {
                ExactReal::scaled_pow2(&bound.coeff, &scaled(&delta, t))
                    .cmp_exact(&m.cnet.eval(t))
                    != Ordering::Greater
            })
        }
    };
    let last_bad = (1..threshold).rev().find(|&k| !m.member_at(&canonical, k));
    let (representative, patched_below) = match last_bad {
        None => (canonical, 1),
        Some(k) => (canonical.patch_below(k + 1, &m.center), k + 1),
    };
    Ok(Capture {
        representative,
        threshold,
        patched_below,
    })
}

/// A point on the sphere of `m`'s ball that leaves every pointwise ball.
///
/// Realizes `y = x + 2 s E ε^ρ` where `E` carries the leading monomial of each
/// residue branch of the eventual form of `C`, and `s` is the least power of
/// two making `2 s E_k > C_k` at every index. Checks the escape on
/// `1..=window` at indices where the center is not overridden.
pub fn escaping_sphere_point(m: &EuclideanModel, window: GridIndex) -> Result<NormalForm> {
    let eventual = m.cnet.eventual().ok_or_else(|| {
        Error::Unsupported(format!(
            "{} is not eventually piecewise monomial",
            m.cnet
        ))
    })?;
    let len = eventual.form.modulus();
    let branches = eventual.form.branches(len);
    let mut lead_terms = Vec::new();
    let mut ratio = Rational::one();
    for (r, b) in branches.iter().enumerate() {
        let ((a0, c0), rest) = match b.split_first() {
            Some(x) if x.0 .1.is_positive() => x,
            _ => {
                return Err(Error::Unsupported(format!(
                    "eventual form {} is not positive on residue {} mod {}",
                    eventual.form, r, len
                )))
            }
        };
        let mask = Mask::new(len, [r as u32]).expect("residue below modulus");
        lead_terms.push(Term::new(c0.clone(), a0.clone(), mask));
        let spread: Rational = rest.iter().map(|(_, c)| c.abs()).sum::<Rational>() / c0;
        ratio = ratio.max(Rational::one() + spread);
    }
    let e = NormalForm::canonicalize(lead_terms);
    let e_rep = Representative::canonical(e.clone());
    // 2 s E_k > F_k for k >= from follows from 2s > ratio
    let mut s = Rational::one();
    while Rational::from_integer(2.into()) * &s <= ratio {
        s *= Rational::from_integer(2.into());
    }
    for k in 1..eventual.from {
        let ek = e_rep.value_at(k);
        while ek.scale(&(Rational::from_integer(2.into()) * &s)).cmp_exact(&m.cnet.eval(k))
            != Ordering::Greater
        {
            s *= Rational::from_integer(2.into());
        }
    }
    let offset = e.scale(&(Rational::from_integer(2.into()) * s)).shift(&m.rho);
    let y = m.center.class_of() + &offset;
    let y_rep = Representative::canonical(y.clone());
    if let Some(k) = first_failure(1, window, |k| {
        m.center.is_patched(k) || !m.member_at(&y_rep, k)
    }) {
        return Err(Error::verification(None, k, "escaping point stays inside"));
    }
    Ok(y)
}

/// Result of [`blow_up_model`].
#[derive(Clone, Debug)]
pub struct BlowUp {
    pub model: EuclideanModel,
    pub certificate: ConditionECertificate,
}

/// Enlarges the scaling of `m` so that `y` sits inside every pointwise ball
/// with margin `(Ĉ_k/2) 2^{-k rho}`.
///
/// `Ĉ = 2 (env(max(1, |y - x| ε^{-ρ})) + C)`, verified on `1..=window`.
pub fn blow_up_model(m: &EuclideanModel, y: &Representative, window: GridIndex) -> Result<BlowUp> {
    if !m.ball().contains(y.class_of()) {
        return Err(Error::precondition(format!(
            "{} is outside the dressed ball of radius e^-{}",
            y.class_of(),
            fmt_rational(&m.rho)
        )));
    }
    let normalized = CNet::prod(
        CNet::abs_diff(y.clone(), m.center.clone()),
        CNet::power(-m.rho.clone()),
    );
    let c_hat = CNet::scale(
        Rational::from_integer(2.into()),
        CNet::sum(monotone_envelope(normalized), m.cnet.clone()),
    )?;
    let model = EuclideanModel::from_parts(m.center.clone(), m.rho.clone(), c_hat);
    for k in 1..=window {
        if !model.member_with_margin_at(y, k) {
            return Err(Error::verification(None, k, "margin below half radius"));
        }
        if model.cnet.eval(k).cmp_exact(&m.cnet.eval(k)) == Ordering::Less {
            return Err(Error::verification(None, k, "blown-up scaling below the original"));
        }
    }
    let certificate = check_condition_e(&model.cnet, window)?;
    Ok(BlowUp { model, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PuiseuxValue;
    use crate::dsl::{parse_cnet, parse_expression};
    use crate::rational::int;

    fn nf(s: &str) -> NormalForm {
        parse_expression(s).unwrap()
    }

    fn default_over(center: &str, rho: i64) -> EuclideanModel {
        let b = DressedBall::new(nf(center), int(rho));
        default_model(&b, Representative::canonical(b.center.clone())).unwrap()
    }

    #[test]
    fn relations() {
        let b1 = DressedBall::new(nf("0"), int(1));
        assert_eq!(
            ball_relation(&b1, &DressedBall::new(nf("e^(2)"), int(2))),
            BallRelation::SecondInsideFirst
        );
        assert_eq!(
            ball_relation(&b1, &DressedBall::new(nf("1"), int(1))),
            BallRelation::Disjoint
        );
        let x = nf("3*e^(1/2) - e^(1) @ mod(2,1)");
        let b = DressedBall::new(x.clone(), int(1));
        let moved = DressedBall::new(&x + &nf("e^(2)"), int(1));
        assert_eq!(ball_relation(&b, &moved), BallRelation::Equal);
        assert_eq!(
            ball_relation(&DressedBall::new(nf("e^(2)"), int(2)), &b1),
            BallRelation::FirstInsideSecond
        );
    }

    #[test]
    fn membership_examples() {
        let m = default_over("0", 1);
        let eps = Representative::canonical(nf("e^(1)"));
        let two = Representative::canonical(nf("2*e^(1)"));
        let sq = Representative::canonical(nf("e^(2)"));
        for k in 1..=64 {
            assert!(m.member_at(&eps, k));
            assert!(!m.member_at(&two, k));
            assert!(m.member_at(&sq, k));
        }
        assert!(check_condition_e(m.cnet(), 64).is_ok());
        let b = DressedBall::new(nf("0"), int(1));
        assert!(default_model(&b, Representative::canonical(nf("1"))).is_err());
    }

    #[test]
    fn capture_examples() {
        let m = default_over("0", 1);
        let c = capture_representative(&m, &nf("e^(2)")).unwrap();
        assert!(c.representative.is_unpatched());
        let c = capture_representative(&m, &nf("4*e^(2)")).unwrap();
        assert_eq!(c.representative.patch_keys(), vec![1]);
        assert_eq!(c.representative.class_of(), &nf("4*e^(2)"));
        for k in 1..=256 {
            assert!(m.member_at(&c.representative, k), "k={}", k);
        }
        assert!(capture_representative(&m, &nf("e^(1)")).is_err());
    }

    #[test]
    fn escape_and_blow_up() {
        let m = default_over("0", 1);
        let y = escaping_sphere_point(&m, 256).unwrap();
        assert_eq!(y, nf("2*e^(1)"));
        assert_eq!(distance(&y, &nf("0")), ValueNorm::ExpNeg(int(1)));
        let patched = Representative::canonical(y.clone()).patch(7, PuiseuxValue::zero());
        assert!(m.member_at(&patched, 7));
        for k in 8..=64 {
            assert!(!m.member_at(&patched, k));
        }
        let b = blow_up_model(&m, &Representative::canonical(y), 256).unwrap();
        for k in 1..=32 {
            assert_eq!(b.model.cnet().eval(k), ExactReal::from_rational(int(6)));
        }
        let center = b.model.center().clone();
        assert!(blow_up_model(&m, &center, 64).is_ok());
    }

    #[test]
    fn escape_for_switched_and_masked_nets() {
        let ball = DressedBall::new(nf("e^(1/2)"), rat_half());
        let c = parse_cnet("sum(env(max(const(1), absdiff{3 @ mod(2,1)}{0})), const(1/2))").unwrap();
        let (m, _) = EuclideanModel::new(Representative::canonical(ball.center.clone()), ball.rho.clone(), c, 64).unwrap();
        let y = escaping_sphere_point(&m, 128).unwrap();
        assert!(ball.on_sphere(&y));
        let c = parse_cnet("switch(4, const(1), env(sum(const(1), pow(1))))").unwrap();
        let (m, _) = EuclideanModel::new(Representative::canonical(ball.center.clone()), ball.rho.clone(), c, 64).unwrap();
        let y = escaping_sphere_point(&m, 128).unwrap();
        let b = blow_up_model(&m, &Representative::canonical(y), 128).unwrap();
        assert_eq!(b.certificate.leading, vec![int(0)]);
        let bad = parse_cnet("max(const(1), absdiff{2}{e^(1)})").unwrap();
        let m = EuclideanModel::from_parts(Representative::canonical(nf("0")), int(1), bad);
        assert!(matches!(escaping_sphere_point(&m, 16), Err(Error::Unsupported(_))));
    }

    fn rat_half() -> Rational {
        crate::rational::rat(1, 2)
    }

    #[test]
    fn threshold_search() {
        assert_eq!(structural_threshold(1, |t| t >= 1), 1);
        assert_eq!(structural_threshold(1, |t| t >= 37), 37);
        assert_eq!(structural_threshold(5, |t| t >= 1000), 1000);
    }
}

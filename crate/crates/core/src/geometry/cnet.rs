//! Scaling nets `(C_k)_k` built as expression trees.
//!
//! Every constructor keeps the net non-negative, so leading coefficients of
//! sums never cancel. Besides exact pointwise evaluation a net exposes three
//! structural summaries used to reason beyond a finite window:
//! per-branch leading exponents ([`Profile`]), an explicit upper bound
//! `C_k <= A 2^{-k a}` ([`Majorant`]), and, for the eventually piecewise
//! monomial subclass, the normal form the net coincides with from some index
//! on ([`Eventual`]).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::algebra::{ExactReal, GridIndex, Mask, NormalForm, Representative, Term};
use crate::error::{Error, Result};
use crate::rational::{ceil_log2, fmt_rational, Rational};

#[derive(Clone, Debug)]
pub enum NetKind {
    Const(Rational),
    /// `ε^a`
    Power(Rational),
    /// `|r1_k - r2_k|`
    AbsDiff(Representative, Representative),
    Sum(CNet, CNet),
    Prod(CNet, CNet),
    Scale(Rational, CNet),
    Min(CNet, CNet),
    Max(CNet, CNet),
    /// Running maximum `max_{j <= k} C_j`.
    Envelope(CNet),
    /// `before` for `k < k0`, `after` for `k >= k0`.
    Switch(GridIndex, CNet, CNet),
}

struct Node {
    kind: NetKind,
    memo: Mutex<HashMap<GridIndex, ExactReal>>,
}

/// A shared, memoizing scaling net.
#[derive(Clone)]
pub struct CNet(Arc<Node>);

impl fmt::Debug for CNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CNet({})", self)
    }
}

impl CNet {
    fn new(kind: NetKind) -> Self {
        CNet(Arc::new(Node {
            kind,
            memo: Mutex::new(HashMap::new()),
        }))
    }

    pub fn constant(q: Rational) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::precondition(format!(
                "const({}) must be positive",
                fmt_rational(&q)
            )));
        }
        Ok(Self::new(NetKind::Const(q)))
    }

    pub fn one() -> Self {
        Self::new(NetKind::Const(Rational::one()))
    }

    pub fn power(a: Rational) -> Self {
        Self::new(NetKind::Power(a))
    }

    pub fn abs_diff(r1: Representative, r2: Representative) -> Self {
        Self::new(NetKind::AbsDiff(r1, r2))
    }

    pub fn sum(a: CNet, b: CNet) -> Self {
        Self::new(NetKind::Sum(a, b))
    }

    pub fn prod(a: CNet, b: CNet) -> Self {
        Self::new(NetKind::Prod(a, b))
    }

    pub fn scale(q: Rational, c: CNet) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::precondition(format!(
                "scale({}, _) must be positive",
                fmt_rational(&q)
            )));
        }
        Ok(Self::new(NetKind::Scale(q, c)))
    }

    pub fn min(a: CNet, b: CNet) -> Self {
        Self::new(NetKind::Min(a, b))
    }

    pub fn max(a: CNet, b: CNet) -> Self {
        Self::new(NetKind::Max(a, b))
    }

    pub fn envelope(c: CNet) -> Self {
        Self::new(NetKind::Envelope(c))
    }

    pub fn switch(k0: GridIndex, before: CNet, after: CNet) -> Self {
        Self::new(NetKind::Switch(k0, before, after))
    }

    pub fn kind(&self) -> &NetKind {
        &self.0.kind
    }

    fn memo_get(&self, k: GridIndex) -> Option<ExactReal> {
        self.0.memo.lock().unwrap().get(&k).cloned()
    }

    fn memo_put(&self, k: GridIndex, v: &ExactReal) {
        self.0.memo.lock().unwrap().insert(k, v.clone());
    }

    /// Exact value `C_k`.
    pub fn eval(&self, k: GridIndex) -> ExactReal {
        assert!(k >= 1, "grid indices start at 1");
        if let Some(v) = self.memo_get(k) {
            return v;
        }
        let v = match &self.0.kind {
            NetKind::Const(q) => ExactReal::from_rational(q.clone()),
            NetKind::Power(a) => {
                ExactReal::scaled_pow2(&Rational::one(), &(a * Rational::from_integer(k.into())))
            }
            NetKind::AbsDiff(r1, r2) => (&r1.value_at(k) - &r2.value_at(k)).abs(),
            NetKind::Sum(a, b) => &a.eval(k) + &b.eval(k),
            NetKind::Prod(a, b) => &a.eval(k) * &b.eval(k),
            NetKind::Scale(q, c) => c.eval(k).scale(q),
            NetKind::Min(a, b) => a.eval(k).min(&b.eval(k)),
            NetKind::Max(a, b) => a.eval(k).max(&b.eval(k)),
            NetKind::Envelope(c) => return self.eval_envelope(c, k),
            NetKind::Switch(k0, before, after) => {
                if k < *k0 {
                    before.eval(k)
                } else {
                    after.eval(k)
                }
            }
        };
        self.memo_put(k, &v);
        v
    }

    fn eval_envelope(&self, inner: &CNet, k: GridIndex) -> ExactReal {
        let (mut start, mut acc) = {
            let memo = self.0.memo.lock().unwrap();
            let mut j = k;
            loop {
                if j == 1 {
                    break (1, None);
                }
                if let Some(v) = memo.get(&(j - 1)) {
                    break (j, Some(v.clone()));
                }
                j -= 1;
            }
        };
        if acc.is_none() {
            let v = inner.eval(1);
            self.memo_put(1, &v);
            acc = Some(v);
            start = 2;
        }
        let mut acc = acc.unwrap();
        for j in start..=k {
            acc = acc.max(&inner.eval(j));
            self.memo_put(j, &acc);
        }
        acc
    }

    /// Whether `C_{k+1} >= C_k` follows from the shape of the tree alone.
    pub fn structurally_monotone(&self) -> bool {
        match &self.0.kind {
            NetKind::Const(_) | NetKind::Envelope(_) => true,
            NetKind::Power(a) => !a.is_positive(),
            NetKind::AbsDiff(..) => false,
            NetKind::Sum(a, b) | NetKind::Prod(a, b) | NetKind::Min(a, b) | NetKind::Max(a, b) => {
                a.structurally_monotone() && b.structurally_monotone()
            }
            NetKind::Scale(_, c) => c.structurally_monotone(),
            NetKind::Switch(k0, before, after) => {
                if *k0 <= 1 {
                    return after.structurally_monotone();
                }
                before.structurally_monotone()
                    && after.structurally_monotone()
                    && before.eval(k0 - 1).cmp_exact(&after.eval(*k0)) != Ordering::Greater
            }
        }
    }

    /// Per-branch leading exponents.
    pub fn profile(&self) -> Profile {
        match &self.0.kind {
            NetKind::Const(_) => Profile::uniform(Some(Rational::zero()), 1),
            NetKind::Power(a) => Profile::uniform(Some(a.clone()), 1),
            NetKind::AbsDiff(r1, r2) => {
                let d = r1.class_of() - r2.class_of();
                let len = d.modulus();
                let lead = d
                    .branches(len)
                    .into_iter()
                    .map(|b| b.first().map(|(a, _)| a.clone()))
                    .collect();
                Profile {
                    modulus: len,
                    lead,
                    settled: settled_after(r1, r2),
                }
            }
            NetKind::Sum(a, b) | NetKind::Max(a, b) => {
                Profile::combine(&a.profile(), &b.profile(), |x, y| match (x, y) {
                    (None, y) => y.clone(),
                    (x, None) => x.clone(),
                    (Some(x), Some(y)) => Some(x.min(y).clone()),
                })
            }
            NetKind::Prod(a, b) => Profile::combine(&a.profile(), &b.profile(), |x, y| match (x, y) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            }),
            NetKind::Min(a, b) => Profile::combine(&a.profile(), &b.profile(), |x, y| match (x, y) {
                (Some(x), Some(y)) => Some(x.max(y).clone()),
                _ => None,
            }),
            NetKind::Scale(_, c) => c.profile(),
            NetKind::Envelope(c) => {
                let p = c.profile();
                match p.lead.iter().flatten().min() {
                    Some(a) => Profile::uniform(Some(a.clone().min(Rational::zero())), 1),
                    None => {
                        let ever_positive = (1..p.settled.max(1))
                            .any(|j| c.eval(j).signum() == Ordering::Greater);
                        if ever_positive {
                            Profile::uniform(Some(Rational::zero()), 1)
                        } else {
                            Profile::uniform(None, p.settled)
                        }
                    }
                }
            }
            NetKind::Switch(k0, _, after) => {
                let mut p = after.profile();
                p.settled = p.settled.max(*k0);
                p
            }
        }
    }

    /// Sharp valuation of the net (`None` is `+∞`).
    pub fn valuation(&self) -> Option<Rational> {
        self.profile().valuation()
    }

    /// Upper bound `C_k <= A 2^{-k a}` valid for `k >= from`.
    pub fn majorant(&self) -> Majorant {
        match &self.0.kind {
            NetKind::Const(q) => Majorant::new(q.clone(), Some(Rational::zero()), 1),
            NetKind::Power(a) => Majorant::new(Rational::one(), Some(a.clone()), 1),
            NetKind::AbsDiff(r1, r2) => {
                let d = r1.class_of() - r2.class_of();
                Majorant::new(d.abs_coeff_sum(), d.valuation(), settled_after(r1, r2))
            }
            NetKind::Sum(a, b) => {
                let (a, b) = (a.majorant(), b.majorant());
                let from = a.from.max(b.from);
                match (a.exponent, b.exponent) {
                    (None, e) => Majorant::new(b.coeff, e, from),
                    (e, None) => Majorant::new(a.coeff, e, from),
                    (Some(x), Some(y)) => Majorant::new(a.coeff + b.coeff, Some(x.min(y)), from),
                }
            }
            NetKind::Max(a, b) => {
                let (a, b) = (a.majorant(), b.majorant());
                let from = a.from.max(b.from);
                match (a.exponent, b.exponent) {
                    (None, e) => Majorant::new(b.coeff, e, from),
                    (e, None) => Majorant::new(a.coeff, e, from),
                    (Some(x), Some(y)) => {
                        Majorant::new(a.coeff.max(b.coeff), Some(x.min(y)), from)
                    }
                }
            }
            NetKind::Prod(a, b) => {
                let (a, b) = (a.majorant(), b.majorant());
                match (&a.exponent, &b.exponent) {
                    (None, _) => a,
                    (_, None) => b,
                    (Some(x), Some(y)) => {
                        Majorant::new(&a.coeff * &b.coeff, Some(x + y), a.from.max(b.from))
                    }
                }
            }
            NetKind::Min(a, b) => {
                let (a, b) = (a.majorant(), b.majorant());
                let a_better = match (&a.exponent, &b.exponent) {
                    (None, _) => true,
                    (_, None) => false,
                    (Some(x), Some(y)) => x > y || (x == y && a.coeff <= b.coeff),
                };
                if a_better {
                    a
                } else {
                    b
                }
            }
            NetKind::Scale(q, c) => {
                let m = c.majorant();
                Majorant::new(q * m.coeff, m.exponent, m.from)
            }
            NetKind::Envelope(c) => {
                let m = c.majorant();
                let early = (1..m.from)
                    .map(|j| c.eval(j).upper_rational())
                    .max()
                    .unwrap_or_else(Rational::zero)
                    .max(Rational::zero());
                match m.exponent {
                    None if early.is_zero() => Majorant::new(Rational::zero(), None, 1),
                    None => Majorant::new(early, Some(Rational::zero()), 1),
                    Some(a) => Majorant::new(
                        early.max(m.coeff),
                        Some(a.min(Rational::zero())),
                        1,
                    ),
                }
            }
            NetKind::Switch(k0, _, after) => {
                let mut m = after.majorant();
                m.from = m.from.max(*k0);
                m
            }
        }
    }

    /// The normal form this net equals from some index on, when the net lies
    /// in the eventually piecewise monomial subclass closed under the
    /// constructors.
    pub fn eventual(&self) -> Option<Eventual> {
        match &self.0.kind {
            NetKind::Const(q) => Some(Eventual::new(1, NormalForm::from_rational(q.clone()))),
            NetKind::Power(a) => Some(Eventual::new(1, NormalForm::monomial(Rational::one(), a.clone()))),
            NetKind::AbsDiff(r1, r2) => {
                let d = r1.class_of() - r2.class_of();
                let len = d.modulus();
                if d.branches(len).iter().any(|b| b.len() > 1) {
                    return None;
                }
                let form = NormalForm::canonicalize(
                    d.terms()
                        .iter()
                        .map(|t| Term::new(t.coeff.abs(), t.exponent.clone(), t.mask.clone()))
                        .collect(),
                );
                Some(Eventual::new(settled_after(r1, r2), form))
            }
            NetKind::Sum(a, b) => {
                let (a, b) = (a.eventual()?, b.eventual()?);
                Some(Eventual::new(a.from.max(b.from), &a.form + &b.form))
            }
            NetKind::Prod(a, b) => {
                let (a, b) = (a.eventual()?, b.eventual()?);
                Some(Eventual::new(a.from.max(b.from), &a.form * &b.form))
            }
            NetKind::Scale(q, c) => {
                let e = c.eventual()?;
                Some(Eventual::new(e.from, e.form.scale(q)))
            }
            NetKind::Min(a, b) => pick_branchwise(&a.eventual()?, &b.eventual()?, Ordering::Less),
            NetKind::Max(a, b) => {
                pick_branchwise(&a.eventual()?, &b.eventual()?, Ordering::Greater)
            }
            NetKind::Envelope(c) => self.eventual_envelope(c),
            NetKind::Switch(k0, _, after) => {
                let e = after.eventual()?;
                Some(Eventual::new(e.from.max(*k0), e.form))
            }
        }
    }

    fn eventual_envelope(&self, inner: &CNet) -> Option<Eventual> {
        let e = inner.eventual()?;
        let len = e.form.modulus();
        let branches = e.form.branches(len);
        let growing = branches
            .iter()
            .any(|b| b.first().is_some_and(|(a, _)| a.is_negative()));
        if growing {
            // a single increasing monomial overtakes the running maximum
            let t = match e.form.terms() {
                [t] if t.mask.is_all() && t.coeff.is_positive() => t,
                _ => return None,
            };
            let mut k = e.from.max(2);
            loop {
                let v = ExactReal::scaled_pow2(&t.coeff, &(&t.exponent * Rational::from_integer(k.into())));
                if v.cmp_exact(&self.eval(k - 1)) != Ordering::Less {
                    return Some(Eventual::new(k, e.form));
                }
                k += 1;
            }
        }
        // Bounded branches: the running max freezes once it dominates every
        // branch tail, bounded by the sum of its positive terms at k + 1.
        const SEARCH: GridIndex = 4096;
        let start = e.from.max(1);
        for k in start..start + SEARCH {
            let current = self.eval(k);
            let next = Rational::from_integer((k + 1).into());
            let frozen = branches.iter().all(|b| {
                let tail = b
                    .iter()
                    .filter(|(_, c)| c.is_positive())
                    .fold(ExactReal::zero(), |acc, (a, c)| {
                        &acc + &ExactReal::scaled_pow2(c, &(a * &next))
                    });
                current.cmp_exact(&tail) != Ordering::Less
            });
            if frozen {
                let c = current.as_rational()?;
                return Some(Eventual::new(k, NormalForm::from_rational(c)));
            }
        }
        None
    }

    /// Exact values `C_1..=C_n`.
    pub fn prefix(&self, n: GridIndex) -> Vec<ExactReal> {
        (1..=n).map(|k| self.eval(k)).collect()
    }
}

fn settled_after(r1: &Representative, r2: &Representative) -> GridIndex {
    r1.max_patch_key()
        .max(r2.max_patch_key())
        .map_or(1, |k| k + 1)
}

/// Branchwise choice between two eventual forms; `want` is `Less` for min.
fn pick_branchwise(a: &Eventual, b: &Eventual, want: Ordering) -> Option<Eventual> {
    let len = a.form.modulus().lcm(&b.form.modulus());
    let diff = &a.form - &b.form;
    let diff_br = diff.branches(len);
    let a_br = a.form.branches(len);
    let b_br = b.form.branches(len);
    let mut from = a.from.max(b.from);
    let mut terms = Vec::new();
    for r in 0..len as usize {
        let mask = Mask::new(len, [r as u32]).expect("non-empty");
        let take_a = match diff_br[r].split_first() {
            None => true,
            Some(((a0, c0), rest)) => {
                if let Some((a1, _)) = rest.first() {
                    let rest_sum: Rational = rest.iter().map(|(_, c)| c.abs()).sum();
                    from = from.max(dominance_index(&c0.abs(), a0, &rest_sum, a1));
                }
                let sign = if c0.is_positive() {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
                sign == want
            }
        };
        let chosen = if take_a { &a_br[r] } else { &b_br[r] };
        for (e, c) in chosen {
            terms.push(Term::new(c.clone(), e.clone(), mask.clone()));
        }
    }
    Some(Eventual::new(from, NormalForm::canonicalize(terms)))
}

/// Least `k >= 1` from which `|c0| 2^{-k a0}` strictly exceeds
/// `rest · 2^{-k a1}` (with `a1 > a0`).
fn dominance_index(c0: &Rational, a0: &Rational, rest: &Rational, a1: &Rational) -> GridIndex {
    let gap = a1 - a0;
    let t = ceil_log2(&(rest / c0));
    if t < 0 {
        return 1;
    }
    let k: num_bigint::BigInt = (Rational::from_integer(t.into()) / gap).floor().to_integer() + 1u32;
    let k: u64 = k.try_into().expect("dominance index fits");
    k.max(1) as GridIndex
}

/// Per-branch leading exponents modulo `modulus`; `None` marks a branch that
/// vanishes from `settled` on.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub modulus: u32,
    pub lead: Vec<Option<Rational>>,
    pub settled: GridIndex,
}

impl Profile {
    fn uniform(a: Option<Rational>, settled: GridIndex) -> Self {
        Profile {
            modulus: 1,
            lead: vec![a],
            settled,
        }
    }

    fn combine(
        a: &Profile,
        b: &Profile,
        f: impl Fn(&Option<Rational>, &Option<Rational>) -> Option<Rational>,
    ) -> Profile {
        let len = a.modulus.lcm(&b.modulus);
        let lead = (0..len)
            .map(|r| {
                f(
                    &a.lead[(r % a.modulus) as usize],
                    &b.lead[(r % b.modulus) as usize],
                )
            })
            .collect();
        Profile {
            modulus: len,
            lead,
            settled: a.settled.max(b.settled),
        }
    }

    pub fn valuation(&self) -> Option<Rational> {
        self.lead.iter().flatten().min().cloned()
    }

    /// First index `k >= from` lying on a vanishing branch.
    pub fn first_vanishing_index(&self, from: GridIndex) -> Option<GridIndex> {
        let start = from.max(self.settled);
        (start..start + self.modulus).find(|k: &GridIndex| self.lead[(k % self.modulus) as usize].is_none())
    }
}

/// `C_k <= coeff · 2^{-k exponent}` for all `k >= from`; a `None` exponent
/// means `C_k = 0` there.
#[derive(Clone, Debug, PartialEq)]
pub struct Majorant {
    pub coeff: Rational,
    pub exponent: Option<Rational>,
    pub from: GridIndex,
}

impl Majorant {
    fn new(coeff: Rational, exponent: Option<Rational>, from: GridIndex) -> Self {
        Majorant {
            coeff,
            exponent,
            from,
        }
    }

    /// The bound at index `k`.
    pub fn at(&self, k: GridIndex) -> ExactReal {
        match &self.exponent {
            None => ExactReal::zero(),
            Some(a) => ExactReal::scaled_pow2(&self.coeff, &(a * Rational::from_integer(k.into()))),
        }
    }
}

/// `C_k = form(k)` for every `k >= from`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eventual {
    pub from: GridIndex,
    pub form: NormalForm,
}

impl Eventual {
    fn new(from: GridIndex, form: NormalForm) -> Self {
        Eventual {
            from: from.max(1),
            form,
        }
    }
}

impl fmt::Display for CNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            NetKind::Const(q) => write!(f, "const({})", fmt_rational(q)),
            NetKind::Power(a) => write!(f, "pow({})", fmt_rational(a)),
            NetKind::AbsDiff(a, b) => write!(f, "absdiff{{{}}}{{{}}}", a.class_of(), b.class_of()),
            NetKind::Sum(a, b) => write!(f, "sum({}, {})", a, b),
            NetKind::Prod(a, b) => write!(f, "prod({}, {})", a, b),
            NetKind::Scale(q, c) => write!(f, "scale({}, {})", fmt_rational(q), c),
            NetKind::Min(a, b) => write!(f, "min({}, {})", a, b),
            NetKind::Max(a, b) => write!(f, "max({}, {})", a, b),
            NetKind::Envelope(c) => write!(f, "env({})", c),
            NetKind::Switch(k0, a, b) => write!(f, "switch({}, {}, {})", k0, a, b),
        }
    }
}

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::Zero;

use super::exact::ExactReal;
use super::expansion::NormalForm;
use crate::rational::Rational;

/// Grid index `k >= 1`, standing for the parameter value `ε_k = 2^{-k}`.
pub type GridIndex = u32;

/// Exact value `Σ c · 2^{-k a}` of a net at some fixed grid index `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PuiseuxValue {
    pairs: Vec<(Rational, Rational)>,
}

impl PuiseuxValue {
    pub fn zero() -> Self {
        PuiseuxValue::default()
    }

    /// Normalizes `(coeff, exponent)` pairs: merges equal exponents, drops zeros,
    /// sorts by exponent.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        let mut acc: BTreeMap<Rational, Rational> = BTreeMap::new();
        for (c, a) in pairs {
            *acc.entry(a).or_insert_with(Rational::zero) += c;
        }
        PuiseuxValue {
            pairs: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(a, c)| (c, a))
                .collect(),
        }
    }

    pub fn pairs(&self) -> &[(Rational, Rational)] {
        &self.pairs
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The real number this value denotes at grid index `k`.
    pub fn at(&self, k: GridIndex) -> ExactReal {
        let k = Rational::from_integer(k.into());
        self.pairs.iter().fold(ExactReal::zero(), |acc, (c, a)| {
            &acc + &ExactReal::scaled_pow2(c, &(&k * a))
        })
    }
}

/// Exact sign of `u(k) - v(k)`: `-1`, `0` or `+1`.
pub fn compare_at(u: &PuiseuxValue, v: &PuiseuxValue, k: GridIndex) -> i8 {
    match u.at(k).cmp_exact(&v.at(k)) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

#[derive(Clone, Debug)]
enum Override {
    Value(PuiseuxValue),
    /// Copy another representative for every index below the bound.
    Below(Arc<Representative>),
}

/// A concrete net in a class: the canonical net of `base` with finitely many
/// overridden indices.
///
/// Overrides are negligible, so [`Representative::class_of`] is always the
/// base. Later overrides win over earlier ones at the same index.
#[derive(Clone, Debug)]
pub struct Representative {
    base: NormalForm,
    points: BTreeMap<GridIndex, (u64, PuiseuxValue)>,
    prefixes: Vec<(u64, GridIndex, Arc<Representative>)>,
    stamp: u64,
    values: Arc<Mutex<HashMap<GridIndex, ExactReal>>>,
}

impl Representative {
    pub fn canonical(base: NormalForm) -> Self {
        Representative {
            base,
            points: BTreeMap::new(),
            prefixes: Vec::new(),
            stamp: 0,
            values: Arc::default(),
        }
    }

    pub fn class_of(&self) -> &NormalForm {
        &self.base
    }

    pub fn is_unpatched(&self) -> bool {
        self.points.is_empty() && self.prefixes.is_empty()
    }

    fn lookup(&self, k: GridIndex) -> Option<Override> {
        let point = self.points.get(&k);
        let prefix = self
            .prefixes
            .iter()
            .filter(|(_, bound, _)| k < *bound)
            .max_by_key(|(stamp, _, _)| *stamp);
        match (point, prefix) {
            (None, None) => None,
            (Some((_, v)), None) => Some(Override::Value(v.clone())),
            (None, Some((_, _, r))) => Some(Override::Below(r.clone())),
            (Some((s1, v)), Some((s2, _, r))) => {
                if s1 > s2 {
                    Some(Override::Value(v.clone()))
                } else {
                    Some(Override::Below(r.clone()))
                }
            }
        }
    }

    pub fn eval_at(&self, k: GridIndex) -> PuiseuxValue {
        match self.lookup(k) {
            Some(Override::Value(v)) => v,
            Some(Override::Below(r)) => r.eval_at(k),
            None => PuiseuxValue::from_pairs(
                self.base.active_at(k),
            ),
        }
    }

    /// Exact real value at `k`.
    pub fn value_at(&self, k: GridIndex) -> ExactReal {
        if let Some(v) = self.values.lock().unwrap().get(&k) {
            return v.clone();
        }
        let v = match self.lookup(k) {
            Some(Override::Value(v)) => v.at(k),
            Some(Override::Below(r)) => r.value_at(k),
            None => PuiseuxValue::from_pairs(self.base.active_at(k)).at(k),
        };
        self.values.lock().unwrap().insert(k, v.clone());
        v
    }

    fn derived(&self) -> Self {
        let mut out = self.clone();
        out.values = Arc::default();
        out.stamp += 1;
        out
    }

    pub fn patch(&self, k: GridIndex, value: PuiseuxValue) -> Self {
        let mut out = self.derived();
        out.points.insert(k, (out.stamp, value));
        out
    }

    /// Overrides every index `k < bound` with the values of `source`.
    pub fn patch_below(&self, bound: GridIndex, source: &Representative) -> Self {
        if bound <= 1 {
            return self.clone();
        }
        let mut out = self.derived();
        out.prefixes
            .push((out.stamp, bound, Arc::new(source.clone())));
        out
    }

    /// Largest overridden index, if any.
    pub fn max_patch_key(&self) -> Option<GridIndex> {
        let p = self.points.keys().next_back().copied();
        let q = self.prefixes.iter().map(|(_, b, _)| b - 1).max();
        p.max(q)
    }

    /// Whether `k` carries an override.
    pub fn is_patched(&self, k: GridIndex) -> bool {
        self.lookup(k).is_some()
    }

    /// Sorted list of overridden indices.
    pub fn patch_keys(&self) -> Vec<GridIndex> {
        let mut keys: Vec<GridIndex> = self.points.keys().copied().collect();
        for (_, b, _) in &self.prefixes {
            keys.extend(1..*b);
        }
        keys.sort_unstable();
        keys.dedup();
        keys
    }
}

pub fn eval_at(r: &Representative, k: GridIndex) -> PuiseuxValue {
    r.eval_at(k)
}

pub fn patch_representative(r: &Representative, k: GridIndex, value: PuiseuxValue) -> Representative {
    r.patch(k, value)
}

pub fn class_of(r: &Representative) -> &NormalForm {
    r.class_of()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::mask::Mask;
    use crate::rational::{int, rat};

    #[test]
    fn eval_examples() {
        let r = Representative::canonical(NormalForm::epsilon());
        assert_eq!(r.eval_at(3), PuiseuxValue::from_pairs([(int(1), int(1))]));
        assert_eq!(r.value_at(3), ExactReal::from_rational(rat(1, 8)));
        let p = r.patch(3, PuiseuxValue::zero());
        assert!(p.eval_at(3).is_zero());
        assert_eq!(p.class_of(), r.class_of());
        let even = Representative::canonical(NormalForm::indicator(Mask::new(2, [0]).unwrap()));
        assert!(even.eval_at(5).is_zero());
    }

    #[test]
    fn last_patch_wins() {
        let r = Representative::canonical(NormalForm::epsilon());
        let one = PuiseuxValue::from_pairs([(int(1), int(0))]);
        let two = PuiseuxValue::from_pairs([(int(2), int(0))]);
        let p = r.patch(2, one).patch(2, two.clone());
        assert_eq!(p.eval_at(2), two);
        let src = Representative::canonical(NormalForm::zero());
        let q = p.patch_below(4, &src);
        assert!(q.eval_at(2).is_zero());
        let back = q.patch(2, two.clone());
        assert_eq!(back.eval_at(2), two);
        assert_eq!(back.patch_keys(), vec![1, 2, 3]);
        assert_eq!(back.max_patch_key(), Some(3));
    }

    #[test]
    fn self_patch_is_noop() {
        let base = &NormalForm::epsilon() + &NormalForm::monomial(int(3), rat(1, 2));
        let r = Representative::canonical(base);
        let p = r.patch(2, r.eval_at(2));
        for k in 1..20 {
            assert_eq!(p.eval_at(k), r.eval_at(k));
        }
    }

    #[test]
    fn compare_examples() {
        let u = PuiseuxValue::from_pairs([(int(3), rat(1, 2))]);
        let v = PuiseuxValue::from_pairs([(int(2), rat(1, 3))]);
        assert_eq!(compare_at(&u, &v, 6), -1);
        let w = PuiseuxValue::from_pairs([(int(1), int(1))]);
        assert_eq!(compare_at(&w, &w, 9), 0);
        let one = PuiseuxValue::from_pairs([(int(1), int(0))]);
        assert_eq!(compare_at(&one, &w, 1), 1);
    }
}

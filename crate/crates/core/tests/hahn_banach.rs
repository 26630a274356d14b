mod common;

use common::*;
use gennum::hahn_banach::{
    frac_norm, functional_apply, hb_ball_family, hb_extend, vector_norm, GenFrac, LFunctional,
    LVector, TestVector,
};
use gennum::{Error, ValueNorm};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

struct Instance {
    phi: LFunctional,
    bound: ValueNorm,
    a: LVector,
    v: LVector,
    samples: Vec<LVector>,
}

/// A functional on the line through `v` with its exact norm as the bound.
fn instance(r: &mut ChaCha8Rng) -> Instance {
    let v = random_vector(r);
    let phi = LFunctional::new(vec![random_frac(r), random_frac(r)]);
    let pv = functional_apply(&phi, &v).unwrap();
    let bound = match (pv.valuation(), vector_norm(&v)) {
        (Some(p), ValueNorm::ExpNeg(w)) => ValueNorm::ExpNeg(p - w),
        _ => ValueNorm::one(),
    };
    let samples: Vec<LVector> = (0..r.gen_range(2..=5)).map(|_| v.scale(&random_frac(r))).collect();
    let a = loop {
        let a = random_vector(r);
        if samples.iter().all(|x| !vector_norm(&x.sub(&a).unwrap()).is_zero()) {
            break a;
        }
    };
    Instance { phi, bound, a, v, samples }
}

fn tests_for(r: &mut ChaCha8Rng, inst: &Instance, n: usize) -> Vec<TestVector> {
    (0..n)
        .map(|i| {
            if i % 4 == 3 {
                TestVector { z: inst.v.scale(&random_frac(r)), lambda: GenFrac::zero() }
            } else {
                let lambda = random_frac(r);
                TestVector { z: pick(r, &inst.samples).scale(&lambda), lambda }
            }
        })
        .collect()
}

fn psi_holds(inst: &Instance, alpha: &GenFrac, a: &LVector, t: &TestVector) -> bool {
    let psi = &functional_apply(&inst.phi, &t.z).unwrap() - &(&t.lambda * alpha);
    let rhs = &inst.bound * &vector_norm(&t.z.sub(&a.scale(&t.lambda)).unwrap());
    frac_norm(&psi) <= rhs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frac_norm_is_multiplicative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = (random_frac(&mut r), random_frac(&mut r));
        prop_assert_eq!(frac_norm(&(&x * &y)), &frac_norm(&x) * &frac_norm(&y));
    }

    #[test]
    fn vector_norm_is_homogeneous(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, l) = (random_vector(&mut r), random_frac(&mut r));
        prop_assert_eq!(vector_norm(&x.scale(&l)), &frac_norm(&l) * &vector_norm(&x));
    }

    #[test]
    fn families_are_nested_and_extensions_hold(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = instance(&mut r);
        let tests = tests_for(&mut r, &inst, 24);
        let ext = hb_extend(&inst.phi, &inst.bound, &inst.a, &inst.samples, &tests).unwrap();
        for (i, b) in ext.family.balls.iter().enumerate() {
            prop_assert!(b.contains(&ext.alpha));
            for c in &ext.family.balls[i + 1..] {
                prop_assert!(b.inside(c) || c.inside(b));
            }
        }
        for pair in ext.family.order.windows(2) {
            prop_assert!(ext.family.balls[pair[1]].inside(&ext.family.balls[pair[0]]));
        }
        for t in &tests {
            prop_assert!(psi_holds(&inst, &ext.alpha, &inst.a, t));
        }
        prop_assert_eq!(ext.tests_passed, tests.len());
    }

    /// Rescaling the samples and the new direction by one `λ` rescales every
    /// ball, keeps the containment order, and yields the same extension.
    #[test]
    fn extension_is_rescaling_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = instance(&mut r);
        let lambda = random_frac(&mut r);
        let tests = tests_for(&mut r, &inst, 12);
        let ext = hb_extend(&inst.phi, &inst.bound, &inst.a, &inst.samples, &tests).unwrap();

        let scaled = Instance {
            samples: inst.samples.iter().map(|x| x.scale(&lambda)).collect(),
            a: inst.a.scale(&lambda),
            v: inst.v.clone(),
            phi: inst.phi.clone(),
            bound: inst.bound.clone(),
        };
        let scaled_tests: Vec<TestVector> = tests
            .iter()
            .map(|t| TestVector { z: t.z.scale(&lambda), lambda: t.lambda.clone() })
            .collect();
        let ext2 = hb_extend(&scaled.phi, &scaled.bound, &scaled.a, &scaled.samples, &scaled_tests).unwrap();

        prop_assert_eq!(&ext2.family.order, &ext.family.order);
        prop_assert_eq!(ext2.minimal, ext.minimal);
        prop_assert_eq!(ext2.alpha.clone(), &lambda * &ext.alpha);
        for (b, b2) in ext.family.balls.iter().zip(&ext2.family.balls) {
            prop_assert_eq!(b2.center.clone(), &lambda * &b.center);
            prop_assert_eq!(b2.radius.clone(), &frac_norm(&lambda) * &b.radius);
        }
        for (t, t2) in tests.iter().zip(&scaled_tests) {
            prop_assert_eq!(psi_holds(&inst, &ext.alpha, &inst.a, t), psi_holds(&scaled, &ext2.alpha, &scaled.a, t2));
        }
    }
}

#[test]
fn inconsistent_bound_names_the_sample() {
    let g = |s: &str| GenFrac::parse(s).unwrap();
    let phi = LFunctional::new(vec![g("1"), g("e^(-1)")]);
    let samples = vec![LVector::unit(2, 0).scale(&g("e^(1)")), LVector::unit(2, 1)];
    let a = LVector::new(vec![g("1"), g("1")]);
    let err = hb_ball_family(&phi, &ValueNorm::one(), &a, &samples).unwrap_err();
    assert!(matches!(err, Error::Extension { index: 1, .. }));
}

#[test]
fn too_small_alpha_is_a_counterexample() {
    let g = |s: &str| GenFrac::parse(s).unwrap();
    let phi = LFunctional::new(vec![g("1"), g("0")]);
    let e1 = LVector::unit(2, 0);
    let a = LVector::unit(2, 1);
    let ext = hb_extend(&phi, &ValueNorm::one(), &a, std::slice::from_ref(&e1), &[]).unwrap();
    assert_eq!(ext.alpha, g("1"));
    // ψ(e₁ − a) = 1 − α is fine; forcing ψ(a) = 1 + ε^{-1} would not be.
    let bad = &ext.alpha + &g("e^(-1)");
    let psi = &functional_apply(&phi, &e1).unwrap() - &bad;
    assert!(frac_norm(&psi) > vector_norm(&e1.sub(&a).unwrap()));
}

mod common;

use common::*;
use gennum::dsl::parse_expression;
use gennum::geometry::DressedBall;
use gennum::rational::Rational;
use gennum::solver::{build_proper_models, intersect_prefix, NestedBallSequence};
use gennum::{distance, Error, ValueNorm};

fn ball(center: &str, rho: Rational) -> DressedBall {
    DressedBall::new(parse_expression(center).unwrap(), rho)
}


#[test]
fn explicit_chain_with_masked_centers() {
    let seq = NestedBallSequence::Explicit(vec![
        ball("1", q(0, 1)),
        ball("1 + 3*e^(1/2) @ mod(2,0)", q(1, 2)),
        ball("1 + 3*e^(1/2) @ mod(2,0) + e^(1) @ mod(2,1)", q(1, 1)),
        ball("1 + 3*e^(1/2) @ mod(2,0) + e^(1) @ mod(2,1) - 7*e^(3/2)", q(2, 1)),
    ]);
    let w = intersect_prefix(&seq, 4, 128).unwrap();
    for (d, b) in w.distances.iter().zip(seq.balls(4).unwrap()) {
        assert!(*d <= b.radius());
        assert_eq!(*d, distance(&w.witness, &b.center));
    }
    assert_eq!(w.chain.verify(128), Ok(3 * 2 * 128));
}

#[test]
fn repeated_radius_is_skipped() {
    let seq = NestedBallSequence::Explicit(vec![
        ball("0", q(1, 1)),
        ball("e^(2)", q(1, 1)),
        ball("e^(2) + e^(3)", q(5, 2)),
    ]);
    let chain = build_proper_models(&seq, 3, 64).unwrap();
    assert_eq!(chain.stages.iter().map(|s| s.ball).collect::<Vec<_>>(), vec![1, 3]);
}

#[test]
fn non_nested_input_is_reported() {
    let seq = NestedBallSequence::Explicit(vec![
        ball("0", q(1, 1)),
        ball("e^(1/2)", q(2, 1)),
    ]);
    assert!(matches!(
        intersect_prefix(&seq, 2, 64),
        Err(Error::NotNested { index: 2, .. })
    ));
}

#[test]
fn geometric_prefix_distances() {
    let w = intersect_prefix(&NestedBallSequence::geometric(), 8, 96).unwrap();
    let expected: Vec<ValueNorm> = (1..=8)
        .map(|i| if i < 8 { ValueNorm::ExpNeg(q(i + 1, 1)) } else { ValueNorm::Zero })
        .collect();
    assert_eq!(w.distances, expected);
}

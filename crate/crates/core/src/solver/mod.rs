//! Nested ball sequences and their intersection: center alignment,
//! containment thresholds, the reset rule, proper model chains and
//! intersection witnesses.

mod align;
mod chain;
mod sequence;
mod witness;

pub use align::{
    align_center, apply_reset, containment_threshold, nested_at, AlignCase, Alignment, Threshold,
};
pub use chain::{
    build_proper_models, intersect_prefix, ChainBuilder, ChainViolation, PrefixWitness,
    ProperModelChain, Stage,
};
pub use sequence::{check_nested, BallCursor, IndexFormula, NestedBallSequence};
pub use witness::{intersect_diagonal, LazyWitness, WitnessCertificate};

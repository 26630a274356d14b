//! Exact arithmetic on the representable subring of generalized numbers:
//! canonical expansions, the sharp valuation and norm, and pointwise exact
//! evaluation on the grid `ε_k = 2^{-k}`.

mod exact;
mod expansion;
mod mask;
mod norm;
mod repr;

pub use exact::ExactReal;
pub use expansion::{
    ring_op, Coeff, ComplexNormalForm, Expansion, GaussianRational, NormalForm, RingOp, Term,
};
pub use mask::Mask;
pub use norm::{distance, sharp_norm, ValueNorm};
pub use repr::{
    class_of, compare_at, eval_at, patch_representative, GridIndex, PuiseuxValue, Representative,
};

//! Exact computation in the ring of Colombeau generalized numbers under the
//! sharp ultra-pseudo-norm.
//!
//! Generalized numbers are modeled by finite expansions `Σ c ε^a` with rational
//! exponents and periodic index masks, evaluated on the grid `ε_k = 2^{-k}`.
//! On top of the arithmetic sit euclidean models of sharp balls, the nested
//! ball intersection construction, a single Hahn-Banach extension step and an
//! ultrametric fixed-point iteration.

pub mod algebra;
pub mod error;
pub mod dsl;
pub mod geometry;
pub mod hahn_banach;
pub mod fixed_point;
pub mod solver;
pub mod rational;
pub mod scenario;

pub use algebra::*;
pub use error::{Error, Result};

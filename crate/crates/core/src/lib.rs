//! Exact analysis of toric cubes: images of the unit cube under monomial
//! maps `t -> (t^{a_1}, ..., t^{a_n})`.
//!
//! Everything is decided in log coordinates `z = log t`, where the map is
//! linear, using exact rational arithmetic. A seeded sampling oracle
//! cross-checks the exact answers.

pub mod analysis;
pub mod cli;
pub mod cone;
mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod strata;

pub use analysis::{Limits, ToricCubeSpec};
pub use error::{Error, Result};
pub use model::{ExponentMatrix, IndexSet, LogValue, LogVector, Rational};

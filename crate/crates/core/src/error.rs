use thiserror::Error;

use crate::cone::GrowthGuardExceeded;
use crate::model::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("coordinate index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Precondition(String),

    /// The instance is larger than the configured enumeration cap.
    #[error("{what} requires {required} items, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error(transparent)]
    Guard(#[from] GrowthGuardExceeded),

    /// Two face images overlap without either containing the other; no
    /// refinement is attempted.
    #[error("strata {first} and {second} overlap partially")]
    PartialOverlap { first: String, second: String },
}

impl Error {
    /// True for errors that mean "input too large for desk scale" rather than
    /// "input is wrong".
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::Guard(_))
    }
}

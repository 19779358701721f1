use alloc::string::String;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("risk level alpha must lie in [0, 1), got {0}")]
    InvalidRiskLevel(f64),
    #[error("duplicate constraint name `{0}`")]
    DuplicateName(String),
    #[error("linear program is numerically unstable: {0}")]
    NumericallyUnstable(&'static str),
    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("linear program ended with status {0:?} where an optimum was required")]
    NotOptimal(LpStatus),
    #[error("enumeration of {count} plans exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },
    #[error("VRS is undefined for a randomized value of {0}")]
    VrsUndefined(f64),
}

//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong when building or evaluating a model.
#[derive(Debug, Error)]
pub enum Error {
    /// The transition matrix is not irreducible and aperiodic, so no
    /// stationary distribution is available.
    #[error("transition matrix is not ergodic: no power up to K^2 is strictly positive")]
    NotErgodic,

    /// Mismatched dimensions between two objects that must agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A value failed its construction invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The observation series does not match the emission family.
    #[error("emission family / data mismatch: {0}")]
    FamilyMismatch(String),

    /// An appearance record shorter than K was used where a full
    /// permutation is required.
    #[error("incomplete appearance record: seen {seen} of {k} states")]
    IncompleteRecord { seen: usize, k: usize },

    /// A required positivity or symmetry condition on the parameters or
    /// the prior does not hold.
    #[error("condition violated: {0}")]
    ConditionViolated(String),

    /// A state-path prefix is not compatible with the queried appearance
    /// order.
    #[error("state-path prefix is inconsistent with the queried appearance order")]
    InconsistentPrefix,

    /// A hidden path violates the structural rules of its model.
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// Exact enumeration would exceed the configured term budget.
    #[error("enumeration budget exceeded: need {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    /// The data has probability zero under the model, so conditional
    /// sampling is undefined.
    #[error("observations have zero probability under the model")]
    ZeroLikelihood,

    /// Bad sampler configuration.
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

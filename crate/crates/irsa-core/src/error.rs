//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is malformed or inconsistent (bad dimensions,
    /// probabilities that do not sum to one, degrees out of range, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called on inputs that violate its stated precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The enumeration walked more nodes than the configured budget allows.
    /// Carries how far it got so callers can report partial progress.
    #[error("enumeration budget exceeded: visited {visited} nodes (budget {budget}), {feasible_found} feasible classes found before aborting")]
    BudgetExceeded {
        visited: u64,
        budget: u64,
        feasible_found: u64,
    },

    /// The instance is too large for the exact pipeline (k above the exact-mode
    /// cap, or t beyond the range of the fixed-width factorial table).
    #[error("instance too large for exact evaluation: {0}")]
    TooLarge(String),
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, representation building,
/// diffusion, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in an interaction file. Carries the 1-based line number.
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    /// Input that violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Split ratios must sum to 1.
    #[error("split ratios ({0}, {1}, {2}) do not sum to 1")]
    BadRatios(f64, f64, f64),

    /// A value that must be finite and nonnegative was not.
    #[error("non-finite or negative value encountered: {0}")]
    BadValue(String),

    /// Representation matrices fed to a pairwise operation disagree on width.
    #[error("representation width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    /// The symmetric eigensolver failed to converge.
    #[error("eigensolver did not converge (eigenvalue {index})")]
    EigenNonConvergence { index: usize },

    /// Eigenpair truncation out of range.
    #[error("truncation {requested} exceeds matrix order {order}")]
    TruncationOutOfRange { requested: usize, order: usize },

    /// The literal proportioning form divides by each entry and is undefined
    /// when a masked entry is zero.
    #[error("literal proportioning hit a zero entry in {axis} {index}")]
    LiteralProportioningZero { axis: &'static str, index: usize },

    /// Metric computation needs at least one user with ground-truth items.
    #[error("no user has ground-truth items")]
    NoTestUsers,

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

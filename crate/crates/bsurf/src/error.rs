//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by library operations.
///
/// Report-style operations (validation, certificates) never fail with these;
/// they encode findings in their report types instead.
#[derive(Debug, Error)]
pub enum BsurfError {
    /// A level index outside the window with no generator to extend it.
    #[error("level {0} is outside the window and no generator is available")]
    OutOfWindow(i64),
    /// The descriptor or window cannot decide the question at the available depth.
    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),
    /// A finite path that is not composable or does not fit the window.
    #[error("invalid path: {0}")]
    InvalidPath(String),
    /// A path descriptor whose tails do not attach or are of the wrong side.
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    /// The path is not eventually extremal on the requested side.
    #[error("not in the boundary set: {0}")]
    NotInBoundary(String),
    /// A tail kind for which no finite evaluation recipe exists.
    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),
    /// λ-type undefined: two competing lengths are equal.
    #[error("Keane hypothesis violated: {0}")]
    KeaneHypothesis(String),
    /// τ-type undefined: the τ coordinates sum to zero.
    #[error("RH hypothesis violated: {0}")]
    RhHypothesis(String),
    /// τ is not in the positive cone of the permutation.
    #[error("tau is not in the cone T+ of the permutation: {0}")]
    NotInCone(String),
    /// β(ε) is undefined because α(1−ε) is the last entry of row ε.
    #[error("beta undefined: {0}")]
    BetaUndefined(String),
    /// The permutation is reducible.
    #[error("reducible permutation: {0}")]
    Reducible(String),
    /// A point outside the domain of a map or chart.
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    /// Two paths that were required to be tail equivalent are not.
    #[error("not tail equivalent: {0}")]
    NotTailEquivalent(String),
    /// Shapes or lengths that do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// Malformed user input.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Malformed text (rationals, permutations, JSON payloads).
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BsurfError>;

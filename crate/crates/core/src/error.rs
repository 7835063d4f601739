//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the lab.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An element does not belong to the algebra context it was used with.
    #[error("context mismatch: {0}")]
    ContextMismatch(String),

    /// The candidate identity element failed the `[aee] = a` probe check.
    #[error("identity violation: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    IdentityViolation { defect: f64, tol: f64 },

    /// A polynomial operation produced more terms than the context allows.
    #[error("degree overflow: {terms} terms exceed cap {cap}")]
    DegreeOverflow { terms: usize, cap: usize },

    /// A control function was evaluated with the wrong number of arguments.
    #[error("arity mismatch: expected {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    /// The requested series has term ratio >= 1 and cannot converge.
    #[error("divergent series: term ratio {ratio} >= 1")]
    Divergent { ratio: f64 },

    /// A sampled control function has no usable decay hint for this direction.
    #[error("truncation tail not certifiable for sampled control function")]
    TailNotCertifiable,

    /// Parameters lie outside the regime a closed-form expression is valid in.
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    /// An iteration index exceeded the configured cap.
    #[error("iteration cap exceeded at n = {0}")]
    CapExceeded(u32),

    /// A verification that requires a certified limit received an uncertified one.
    #[error("result is not certified")]
    NotCertified,

    /// The map under test does not satisfy the required scaling hypothesis.
    #[error("scaling hypothesis violated: defect {0:.3e}")]
    ScalingHypothesisViolated(f64),

    /// An explicit precondition on the operation's inputs is violated.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// The map under test fails the hypothesis the verification assumes.
    #[error("hypothesis not satisfied: defect {0:.3e} exceeds tolerance {1:.3e}")]
    InapplicableHypothesis(f64, f64),

    /// A probe function failed to evaluate.
    #[error("probe evaluation failed: {0}")]
    EvaluationFailure(String),

    /// Every calibration sample had a degenerate denominator.
    #[error("all calibration samples had degenerate denominators")]
    DenominatorDegenerate,

    /// A similarity matrix is singular or too ill-conditioned to invert.
    #[error("singular or ill-conditioned similarity matrix: {0}")]
    SingularS(String),

    /// A constructor received an invalid parameter value.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid rational literal {0:?}")]
    InvalidRational(String),
    #[error("table of length {len} does not fit arity {arity}")]
    TableLength { arity: usize, len: usize },
    #[error("variable index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("operation needs a constraint of positive arity")]
    ArityZero,
    #[error("merge needs two distinct variables, got {0} twice")]
    SameIndex(usize),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error("constraint is not symmetric")]
    Asymmetric,
    #[error("constraint set is empty")]
    EmptySet,
    #[error("all-zero constraint is not accepted here")]
    AllZero,
    #[error("unknown constraint name {0:?}")]
    UnknownConstraint(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("conflicting definitions for constraint {0:?}")]
    NameConflict(String),
    #[error("{vars} free variables exceed the enumeration cap of {cap}")]
    EnumerationCap { vars: usize, cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal deviation from the case analysis: {0}")]
    ProofDeviation(String),
    #[error("chain verification failed at step {step}: {detail}")]
    Verification { step: usize, detail: String },
    #[error("malformed input: {0}")]
    Malformed(String),
}

use thiserror::Error;

/// Errors raised by the semantic core and the bounded oracles.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("variable `{0}` is not bound in the store")]
    UnboundVariable(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("stores differ on variable `{0}`")]
    StoresDiffer(String),
    #[error("predicate `{0}` has a rule without a component atom")]
    NonProgressingSid(String),
    #[error("index guard mismatch for `{0}`")]
    IndexGuardMismatch(String),
    #[error("index parameter `{0}` has no value")]
    UnboundIndexParam(String),
    #[error("enumeration size {actual} exceeds cap {cap}")]
    SizeGuard { actual: u64, cap: u64 },
    #[error("execution budget exceeded ({0} states)")]
    BudgetExceeded(usize),
    #[error("program is not local: {0}")]
    NotLocal(String),
    #[error("pure part is inconsistent: {0} both equal and distinct from {1}")]
    InconsistentPure(String, String),
    #[error("tightness of predicate `{0}` is not declared")]
    TightnessUnknown(String),
    #[error("arity mismatch for `{name}`: expected {expected}, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced by the kernel proper (scope checking, rewriting,
/// matching, typing). Surface-syntax errors live in [`crate::surface`].
#[derive(Debug, Clone, Error)]
pub enum KernelError {
    #[error("unknown constant `{0}`")]
    UnknownConst(String),

    #[error("variable index {index} out of scope (telescope has {len} entries)")]
    VarOutOfScope { index: usize, len: usize },

    #[error("`{name}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("binder shape mismatch at argument of `{head}`: expected {expected}, found {found}")]
    BinderMismatch {
        head: String,
        expected: String,
        found: String,
    },

    #[error("sort mismatch: expected `{expected}`, found `{found}`")]
    SortMismatch { expected: String, found: String },

    #[error("`{0}` is a type-level constant and cannot head a term")]
    TypeLevelInTerm(String),

    #[error("`{0}` is a term-level constant and cannot head a type")]
    TermLevelInType(String),

    #[error("type mismatch: expected `{expected}`, found `{found}`")]
    TypeMismatch { expected: String, found: String },

    #[error("no inference rule for `{0}` (checked-only constant)")]
    NoInferRule(String),

    #[error("matching failed: {0}")]
    MatchFail(String),

    #[error("not a pattern: {0}")]
    PatternViolation(String),

    #[error("rewrite fuel exhausted")]
    FuelExhausted,

    #[error("rule right-hand side uses variable `{0}` not bound by the left-hand side")]
    UnboundRuleVar(String),

    #[error("rule variable `{0}` does not occur in the left-hand side")]
    UnusedRuleVar(String),

    #[error("variable escapes its scope during strengthening")]
    VarEscapes,

    #[error("erased argument of `{head}` cannot be elaborated here: {reason}")]
    NeedsElaboration { head: String, reason: String },

    #[error("invalid moded entry `{name}`: {reason}")]
    InvalidModedEntry { name: String, reason: String },

    #[error("{0}")]
    Other(String),
}

pub type KResult<T> = Result<T, KernelError>;

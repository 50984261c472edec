use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("position {pos}: {message}")]
    FormulaSyntax { pos: usize, message: String },
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("element out of range: {0}")]
    CarrierMembership(String),
    #[error("function not total: {0}")]
    Totality(String),
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("arity error: {0}")]
    Arity(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("dialect mismatch: {0}")]
    Dialect(String),
    #[error("unsupported formula shape: {0}")]
    UnsupportedShape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
    #[error("capacity infeasible: {0}")]
    Capacity(String),
    #[error("axiom violated: {0}")]
    Axiom(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("closure bound exceeded: {0}")]
    ClosureBound(String),
    #[error("amalgamation failed: {0}")]
    Amalgamation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

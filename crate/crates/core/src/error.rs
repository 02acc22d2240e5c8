use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unsupported field width q={0} (expected 2..=8)")]
    UnsupportedWidth(u8),
    #[error("reduction polynomial 0x{poly:X} is not a degree-{q} irreducible candidate")]
    BadPolynomial { q: u8, poly: u16 },
    #[error("generator {generator} is not primitive (cycle closed after {order} steps)")]
    NotPrimitive { generator: u8, order: usize },
    #[error("value {value} is outside GF(2^{q})")]
    OutOfRange { value: u32, q: u8 },
    #[error("division by zero")]
    DivideByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid code parameters: {0}")]
    ParamsInvalid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("insufficient packets: received {received}, need {needed}")]
    InsufficientPackets { received: usize, needed: usize },
    #[error("row index {index} out of range 1..={n}")]
    RowOutOfRange { index: usize, n: usize },
    #[error("duplicate row index {0}")]
    DuplicateRow(usize),
    #[error("generator submatrix is singular")]
    SingularSubmatrix,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("{l} paths cannot each carry a packet when n={n}")]
    TooManyPaths { n: usize, l: usize },
    #[error("payload is empty")]
    EmptyPayload,
    #[error("stripe header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("malformed stripe file: {0}")]
    Malformed(String),
    #[error("checksum failure: stored 0x{stored:08X}, computed 0x{computed:08X}")]
    ChecksumFailure { stored: u32, computed: u32 },
    #[error("row {row} is not carried on path {path}")]
    UnknownRow { path: usize, row: usize },
}

impl TransportError {
    /// True when the failure is an unrecoverable loss rather than bad input.
    pub fn is_insufficient(&self) -> bool {
        matches!(
            self,
            TransportError::Code(CodeError::InsufficientPackets { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("path count l={0} must be at least 2")]
    BadPathCount(usize),
    #[error("probability {0} outside [0, 1)")]
    BadProbability(f64),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("secrecy violated: k={k} < largest stripe {m_prime}")]
    SecrecyViolated { k: usize, m_prime: usize },
    #[error("no redundancy up to {cap} meets the threshold")]
    Infeasible { cap: usize },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad simulation spec: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("integration check failed on trial {trial}: decoded payload differs")]
    Mismatch { trial: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("bad intercept: {0}")]
    BadIntercept(String),
    #[error("bad predicate: {0}")]
    BadPredicate(String),
    #[error("no candidate satisfies the format predicate")]
    PredicateUnsatisfiable,
}

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input payload could not be parsed into a sequence. Positions are 1-based
    /// byte offsets into the raw input.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A source model is structurally invalid (non-stochastic row, reducible
    /// chain, ...).
    #[error("model error: {0}")]
    Model(String),

    /// An exact-enumeration guard was exceeded.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Distribution support mismatch (e.g. KL divergence with q(a)=0 < p(a)).
    #[error("domain error: {0}")]
    Domain(String),

    /// External codec invocation failed; carries captured diagnostics.
    #[error("codec error: {0}")]
    Codec(String),

    /// An experiment specification is inconsistent with the requested run.
    #[error("spec error: {0}")]
    Spec(String),

    /// The requested quantity has no exact value for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An internal invariant was violated (a bug, not a usage error).
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

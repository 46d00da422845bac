use thiserror::Error;

/// Errors raised by the simulation library.
///
/// The CLI maps each variant onto a process exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-facing parameters. `field` is a dotted config path when known.
    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    /// A function was called with arguments violating its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Fock basis larger than the configured memory cap.
    #[error("capacity exceeded: basis dimension {dimension} > cap {cap}")]
    Capacity { dimension: usize, cap: usize },

    #[error("numerical blow-up at t = {time}: {message}")]
    Blowup { time: f64, message: String },

    #[error("Krylov propagation did not converge (residual {residual:e})")]
    Krylov { residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) => 2,
            Error::Capacity { .. } => 3,
            Error::Blowup { .. } | Error::Krylov { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

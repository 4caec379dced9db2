use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("gauge error: {0}")]
    Gauge(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("out of table range: {0}")]
    Range(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("singular distance: {0}")]
    SingularDistance(String),

    #[error("table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for configuration and input problems, 3 for
    /// solver failures, 4 for oracle, table and range problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Config(_) | Error::Mode(_) => 2,
            Error::Convergence { .. } => 3,
            Error::Gauge(_) | Error::Range(_) | Error::SingularDistance(_) | Error::Cache(_) | Error::Io(_) => 4,
        }
    }
}

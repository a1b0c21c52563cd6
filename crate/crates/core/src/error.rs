use thiserror::Error;

/// Errors produced by the modelling, training and inference routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The copula correlation is at (or beyond) ±1 where the density is degenerate.
    #[error("degenerate copula: |rho| = {0} must be < 1")]
    DegenerateCopula(f64),

    #[error("inversion failed for target {target}: {reason}")]
    InversionFailure { target: f64, reason: String },

    #[error("dataset too small: {got} rows, need at least {need}")]
    DatasetTooSmall { got: usize, need: usize },

    #[error("fit diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("fit failed at rho = {rho}: {source}")]
    SweepPoint {
        rho: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed config text. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A scenario or run parameter violates an invariant; the message names it.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A scheme needs an entity the scenario does not define.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel matrix has non-finite entries")]
    NonFinite,

    #[error("region map has no cells")]
    EmptyMap,

    #[error("unknown sweep variable `{0}` (expected tx_power_dbm, ris_elements, phase_noise_bound or vpl_db)")]
    UnknownSweep(String),

    #[error("unknown preset `{0}` (expected fig2, fig3, fig4, fig5 or fig6)")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than the runtime environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Config(_)
                | Error::UnknownSweep(_)
                | Error::UnknownPreset(_)
        )
    }
}

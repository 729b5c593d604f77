use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("ambiguous state labels at phi_e = {flux_phi0:.6} Phi0: {detail}")]
    AmbiguousLabels { flux_phi0: f64, detail: String },

    #[error("dispersive approximation breaks down at phi_e = {flux_phi0:.6} Phi0 (|detuning| = {detuning_ghz:.4} GHz)")]
    DispersiveBreakdown { flux_phi0: f64, detuning_ghz: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::ParameterDomain(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

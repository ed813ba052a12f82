use thiserror::Error;

pub type Result<T> = std::result::Result<T, NrcError>;

#[derive(Debug, Error)]
pub enum NrcError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("pilot budget violated: {0}")]
    PilotBudget(String),

    #[error("singular matrix in {context} (condition estimate {condition:.3e})")]
    Singular { context: String, condition: f64 },

    #[error("measurement graph is disconnected: antenna {0} is unreachable from the anchor")]
    Disconnected(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl NrcError {
    pub(crate) fn singular(context: impl Into<String>, condition: f64) -> Self {
        NrcError::Singular {
            context: context.into(),
            condition,
        }
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            NrcError::Config(_)
                | NrcError::Parameter(_)
                | NrcError::PilotBudget(_)
                | NrcError::Json(_)
                | NrcError::Io(_)
        )
    }
}

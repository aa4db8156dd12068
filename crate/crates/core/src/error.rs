use thiserror::Error;

/// Errors produced by loading, fitting and model selection.
#[derive(Debug, Error)]
pub enum KpartError {
    #[error("domain error in year {year}: {message}")]
    Domain { year: i32, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("series `{0}` has no usable rows")]
    EmptySeries(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("singular design: column(s) {} are linearly dependent on earlier columns", .roles.join(", "))]
    SingularDesign { roles: Vec<String> },

    #[error("insufficient data: n = {n} observations for p = {p} parameters (need n >= p + 2)")]
    InsufficientData { n: usize, p: usize },

    #[error("no feasible model among {masks} candidate knot subsets")]
    NoFeasibleModel { masks: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KpartError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        KpartError::Contract(msg.into())
    }

    /// True for errors caused by unusable input data rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            KpartError::Domain { .. }
                | KpartError::Format(_)
                | KpartError::EmptySeries(_)
                | KpartError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, KpartError>;

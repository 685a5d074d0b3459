use thiserror::Error;

/// Errors raised by the simulator core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("frame speed {speed} m/s reaches or exceeds the speed of light")]
    SuperluminalFrame { speed: f64 },

    #[error("no Bragg solution: lambda / (2 n lambda_s) = {argument} exceeds 1")]
    NoBraggSolution { argument: f64 },

    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),

    #[error(
        "arm-imbalance delay {arm_delay_s} s does not resolve the coincidence \
         window {window_s} s"
    )]
    UnresolvablePeaks { arm_delay_s: f64, window_s: f64 },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error("invalid scan: {0}")]
    Scan(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }

    /// True for errors that indicate a bad configuration or scan description
    /// rather than a runtime failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::SuperluminalFrame { .. }
                | Error::NoBraggSolution { .. }
                | Error::VisibilityOutOfRange(_)
                | Error::UnresolvablePeaks { .. }
                | Error::Config { .. }
                | Error::Scan(_)
                | Error::InvalidArgument(_)
        )
    }
}

use thiserror::Error;

/// Errors raised by state construction, the model integrators and the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("mismatched truncation: {left} vs {right} modes")]
    MismatchedTruncation { left: usize, right: usize },

    #[error("mode {n} outside truncation |n| <= {n_modes}")]
    ModeOutOfRange { n: i64, n_modes: usize },

    #[error("coordinate {n} blows up at t* = {t_star}")]
    BlowUp { n: usize, t_star: f64 },

    #[error("integration unstable at t = {t}: coefficient magnitude {magnitude:e} exceeds guard {guard:e}")]
    StepUnstable { t: f64, magnitude: f64, guard: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("perturbation direction has zero norm")]
    ZeroDirection,

    #[error("fit degenerate: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors that signal a computed instability of the model
    /// (finite-time blow-up or integrator overflow) rather than bad input.
    pub fn is_instability(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::StepUnstable { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

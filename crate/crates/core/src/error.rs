use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("law has infinite mean: {0}")]
    InfiniteMean(String),

    #[error("stationary start undefined: {0}")]
    StationarityUndefined(String),

    #[error("series diverges: {0}")]
    Divergence(String),

    #[error("target {target} outside the range of {what}")]
    OutOfRange { what: &'static str, target: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("moments incompatible with the {family} family: {reason}")]
    IncompatibleMoments {
        family: &'static str,
        reason: String,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: u32, residual: f64 },

    #[error("degenerate saddlepoint: {0}")]
    DegenerateSaddle(String),

    #[error("size limit exceeded: {0}")]
    Size(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }

    pub(crate) fn incompatible(family: &'static str, reason: impl Into<String>) -> Self {
        Error::IncompatibleMoments {
            family,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used in JSON error bodies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::InfiniteMean(_) => "infinite_mean",
            Error::StationarityUndefined(_) => "stationarity_undefined",
            Error::Divergence(_) => "divergence",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InsufficientData(_) => "insufficient_data",
            Error::IncompatibleMoments { .. } => "incompatible_moments",
            Error::Convergence { .. } => "convergence",
            Error::DegenerateSaddle(_) => "degenerate_saddle",
            Error::Size(_) => "size",
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

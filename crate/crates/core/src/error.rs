use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the range where the model is defined.
    #[error("{quantity} = {value} is outside the model domain {domain}")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: String,
    },

    /// A configuration or parameter-set field failed validation.
    #[error("invalid `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    /// Text input (environment file, config) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(
        "quadrature did not converge: estimated error {achieved:.3e} exceeds {requested:.3e} \
         after {subdivisions} subdivisions"
    )]
    ToleranceNotMet {
        value: f64,
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },

    #[error("interference profile was built for a different configuration")]
    ProfileMismatch,

    #[error("bracket [{lo}, {hi}] failed the unimodality probe")]
    NotUnimodal { lo: f64, hi: f64 },

    #[error("sweep failed at {parameter} = {value}: {source}")]
    SweepPoint {
        parameter: &'static str,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn angle(quantity: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            value,
            domain: domain.into(),
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::ToleranceNotMet { .. } => true,
            Error::SweepPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

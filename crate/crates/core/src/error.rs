use thiserror::Error;

/// Errors raised by the numerical kernels, the channel models and the
/// experiment configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} is outside its domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("integrand returned a non-finite value at x = {abscissa}")]
    Integration { abscissa: f64 },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

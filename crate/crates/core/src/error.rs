use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A hypothesis of the requested computation is violated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("site {site} lies outside the custom potential table [{first}, {last}]")]
    OutOfRange { site: i64, first: i64, last: i64 },

    #[error("wavepacket window of {sites} sites exceeds the cap of {cap} sites")]
    TolUnreachable { sites: usize, cap: usize },

    #[error("resolvent padding of {padding} sites exceeds the cap of {cap} sites")]
    BoxCapExceeded { padding: usize, cap: usize },

    #[error("quadrature error estimate {estimate:.3e} exceeds the tolerance {tolerance:.3e}")]
    GridTooCoarse { estimate: f64, tolerance: f64 },

    #[error("level {level}: found {found} bands, expected {expected}")]
    BandCountMismatch {
        level: usize,
        found: usize,
        expected: usize,
    },

    #[error("level {level}: found {found} roots of the trace, expected {expected}")]
    RootCountMismatch {
        level: usize,
        found: usize,
        expected: usize,
    },

    #[error("fit needs at least {required} usable points, got {usable}")]
    DegenerateFit { usable: usize, required: usize },

    #[error("series spans {decades:.2} decades, at least {required} required")]
    SeriesTooShort { decades: f64, required: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("schema error in {file}: {reason}")]
    Schema { file: String, reason: String },

    #[error("{context}: {source}")]
    Task {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Wraps a component error with the task it occurred in.
    pub fn in_task(self, context: impl Into<String>) -> Self {
        Error::Task {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by a rejected configuration rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config { .. } => true,
            Error::Task { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is out of its allowed range.
    #[error("configuration error: {0}")]
    Config(String),

    /// An input lies outside the domain of a closed-form operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A deployment plan cannot satisfy the requested constraints.
    #[error("planning error: {0}")]
    Planning(String),

    /// A caller broke an operation's calling contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Fewer than three non-collinear anchors are reachable for a TDOA fix.
    #[error("fine-grained localization unavailable: {reachable} anchors in range, need 3 non-collinear")]
    FineUnavailable { reachable: usize },

    #[error("no samples for NTL `{0}`")]
    EmptyTrace(String),

    #[error("overhead undefined: baseline performed no fine-grained localizations")]
    UndefinedOverhead,

    /// A scenario file failed schema validation.
    #[error("scenario file: {0}")]
    Schema(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

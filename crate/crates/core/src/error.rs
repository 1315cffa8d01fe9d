use thiserror::Error;

/// Error taxonomy shared by every module. The CLI maps `Config` and
/// `Domain` onto exit code 2; everything else is surfaced verbatim.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument range was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A resource guard refused the request (table too large, etc.).
    #[error("resource refusal: {0}")]
    Resource(String),

    /// A declared contract was breached at evaluation time
    /// (e.g. a unit-disc function produced a value outside the disc).
    #[error("contract breach: {0}")]
    Contract(String),

    /// An experiment configuration is inconsistent with the operation's
    /// stated constraints (grid violates a T-bound, unknown check id, ...).
    #[error("config error: {0}")]
    Config(String),

    /// The hypothesis of the inequality under test does not hold for the
    /// supplied inputs, so no verdict can honestly be produced.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialize(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialize(e.to_string())
    }
}

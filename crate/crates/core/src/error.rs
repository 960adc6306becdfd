use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the explanation library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, dimensions or settings that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad data handed to an operation (non-finite values, empty tables, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A caller-supplied argument outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// Brute-force work refused because the feature count exceeds the cap.
    #[error("resource error: {what} needs M <= {cap}, got M = {m}")]
    Resource { what: &'static str, cap: usize, m: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    /// The regression design is still rank deficient.
    #[error("not yet identifiable after {samples} samples (M = {m})")]
    NotIdentifiable { samples: usize, m: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

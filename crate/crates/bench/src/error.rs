use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] shear_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// `1` for problems with the inputs the user supplied, `2` for failures while running.
    pub fn exit_code(&self) -> i32 {
        use shear_core::Error as C;
        match self {
            Error::Config(_) | Error::Read { .. } | Error::Format { .. } => 1,
            Error::Core(
                C::Config(_) | C::Input(_) | C::Argument(_) | C::Parse { .. } | C::Validation(_) | C::Resource { .. },
            ) => 1,
            Error::Core(_) | Error::Csv(_) | Error::Io(_) => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 1);
        assert_eq!(Error::Core(shear_core::Error::Argument("n".into())).exit_code(), 1);
        assert_eq!(Error::Core(shear_core::Error::Divergence { epoch: 1, loss: f64::NAN }).exit_code(), 2);
        assert_eq!(Error::Io(std::io::Error::other("disk")).exit_code(), 2);
    }
}

use std::path::PathBuf;

/// Errors raised by the detection pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max {max_eig:e})")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("model is under-identified: {equations} equations for {parameters} parameters")]
    UnderIdentified { equations: usize, parameters: usize },

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors that stem from user input rather than computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Linear-solve failure inside the nonlinear driver, tagged with the
    /// iteration at which it occurred.
    #[error("singular system at nonlinear iteration {iteration}: {detail}")]
    SingularSystem { iteration: usize, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

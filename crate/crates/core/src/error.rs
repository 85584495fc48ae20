use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("simulation blew up at step {step}")]
    SimulationBlowup { step: usize },

    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    /// `col == None` refers to the right-hand side.
    #[error("non-finite entry in assembled system at row {row}{}", col.map(|c| alloc::format!(", column {c}")).unwrap_or_else(|| alloc::string::String::from(" of the right-hand side")))]
    Assembly { row: usize, col: Option<usize> },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what, expected, found })
        }
    }
}

use std::path::Path;

/// Errors surfaced by the runner, each mapped to a distinct exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),

    #[error("registry error: {0}")]
    Registry(String),

    #[error("simulation blew up at step {0}")]
    Blowup(usize),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(itofit_core::Error),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Registry(_) => 3,
            CliError::Blowup(_) => 4,
            CliError::Io(_) => 5,
            CliError::Core(_) => 1,
        }
    }
}

impl From<itofit_core::Error> for CliError {
    fn from(e: itofit_core::Error) -> Self {
        match e {
            itofit_core::Error::SimulationBlowup { step } => CliError::Blowup(step),
            other => CliError::Core(other),
        }
    }
}

use thiserror::Error;

/// Outcome classes with fixed exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// The scenario or flags cannot be turned into a valid run (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// The run completed but a check or convergence criterion failed (exit 1).
    #[error("check failed: {0}")]
    Check(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<solenoid::Error> for CliError {
    fn from(e: solenoid::Error) -> Self {
        let debug = format!("{e:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error");
        CliError::Config(format!("{kind}: {e}"))
    }
}

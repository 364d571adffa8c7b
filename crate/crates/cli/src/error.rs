use std::fmt;

use idprior_core::error::Error as CoreError;

use crate::config::ConfigErrors;

#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad data file or an inconsistent combination of settings.
    Config(ConfigErrors),
    /// A numerical diagnostic tripped (weight degeneracy, underflow, stuck chain).
    Numerical(String),
    Io(String),
    Other(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(ConfigErrors(vec![msg.into()]))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "invalid config:\n{e}"),
            CliError::Numerical(e) => write!(f, "numerical diagnostic failed: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Other(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateWeights { .. }
            | CoreError::EvidenceUnderflow { .. }
            | CoreError::NoAcceptance { .. }
            | CoreError::Factorization { .. } => CliError::Numerical(e.to_string()),
            CoreError::InvalidParameter { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::GridTooCoarse { .. }
            | CoreError::IndexOutOfRange { .. } => CliError::config(e.to_string()),
            CoreError::Domain(_) | CoreError::Unsupported(_) => CliError::Other(e.to_string()),
        }
    }
}

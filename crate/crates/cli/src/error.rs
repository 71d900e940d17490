use lattice_core::LatticeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration failed: {0}")]
    Integration(LatticeError),

    #[error("explicit solution failed: {0}")]
    Moser(LatticeError),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("{0}")]
    Lattice(LatticeError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Moser(_) => 4,
            CliError::VerificationFailed(_) | CliError::Lattice(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::DomainExit { .. } | LatticeError::StepUnderflow { .. } => CliError::Integration(e),
            other => CliError::Lattice(other),
        }
    }
}

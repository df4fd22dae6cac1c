//! Exit-code contract: 0 certified, 1 not certified, 2 parse or usage
//! error, 3 violated modeling assumption, 4 diverging simulation. Scripts
//! branch on these, so the mapping lives in one place.

use std::fmt::Display;

use hierlyap::error::{CertifyError, GainError, ModelError, SimError};

pub const EXIT_NOT_CERTIFIED: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_ASSUMPTION: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;

/// Failure with the exit code it must map to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Display) -> Self {
        Self {
            code: EXIT_PARSE,
            message: message.to_string(),
        }
    }

    pub fn assumption(message: impl Display) -> Self {
        Self {
            code: EXIT_ASSUMPTION,
            message: message.to_string(),
        }
    }

    pub fn divergence(message: impl Display) -> Self {
        Self {
            code: EXIT_DIVERGENCE,
            message: message.to_string(),
        }
    }

    pub fn not_certified(message: impl Display) -> Self {
        Self {
            code: EXIT_NOT_CERTIFIED,
            message: message.to_string(),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::parse(e)
    }
}

impl From<GainError> for CliError {
    fn from(e: GainError) -> Self {
        // Every gain failure names the offending subsystem or coupling in
        // its display text.
        CliError::assumption(e)
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::Gain(g) => g.into(),
            CertifyError::Model(m) => m.into(),
            CertifyError::DimensionMismatch { .. } | CertifyError::BadInput { .. } => {
                CliError::parse(e)
            }
            CertifyError::NoScalingFound | CertifyError::VerificationFailed { .. } => {
                CliError::assumption(e)
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Divergence { .. } => CliError::divergence(e),
            SimError::BadConfig { .. } => CliError::parse(e),
            SimError::Model(m) => m.into(),
        }
    }
}

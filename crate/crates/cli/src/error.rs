use std::fmt::Display;

use superhedge::hedging::HedgingError;
use superhedge::lp::LpError;
use superhedge::paths::PathError;
use superhedge::pricing::PricingError;
use superhedge::tree::TreeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(e: impl Display) -> Self {
        Self::Config(e.to_string())
    }

    pub fn numerical(e: impl Display) -> Self {
        Self::Numerical(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Contract(_) => 4,
        }
    }
}

impl From<PricingError> for CliError {
    fn from(e: PricingError) -> Self {
        match &e {
            PricingError::KappaOutOfRange(_)
            | PricingError::KappaTildeOutOfRange { .. }
            | PricingError::NoKappaTilde { .. }
            | PricingError::InvalidInput(_)
            | PricingError::MisalignedPlan(_)
            | PricingError::Payoff(_)
            | PricingError::Tree(_)
            | PricingError::Lp(LpError::SizeExceeded { .. } | LpError::InvalidProgram(_)) => Self::config(e),
            PricingError::NoConsistentPriceSystem => Self::Contract(e.to_string()),
            _ => Self::numerical(e),
        }
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        Self::config(e)
    }
}

impl From<HedgingError> for CliError {
    fn from(e: HedgingError) -> Self {
        match e {
            HedgingError::Pricing(p) => p.into(),
            HedgingError::Path(PathError::FactorizationFailure { .. }) => Self::numerical(e),
            _ => Self::config(e),
        }
    }
}

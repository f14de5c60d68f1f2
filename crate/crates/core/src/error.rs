use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid fuzzy set (m1={m1}, m2={m2}, sigma={sigma}): {reason}")]
    InvalidSet {
        m1: f64,
        m2: f64,
        sigma: f64,
        reason: &'static str,
    },

    #[error("rulebase is empty")]
    EmptyRulebase,

    #[error("no rule fires for the given input")]
    NoFiring,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("simulation diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::InvalidSet { .. } | Error::InvalidParameter(_) => 2,
            Error::Divergence { .. } | Error::NonFinite(_) | Error::NoFiring => 3,
            Error::Io(_) => 4,
            Error::DimensionMismatch { .. } | Error::EmptyRulebase => 2,
        }
    }
}

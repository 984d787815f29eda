use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} outside the sequence window [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("invalid control sequence: {0}")]
    InvalidSequence(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid preset parameter: {0}")]
    InvalidPresetParam(String),

    #[error("closed-form filter unsupported: {0}; use the numeric route instead")]
    UnsupportedSequence(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("negative frequency {0} passed to a one-sided spectrum")]
    NegativeFrequency(f64),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error(
        "frequency quadrature did not converge after {points} points (last estimates {previous:e} and {last:e})"
    )]
    NoConvergence {
        points: usize,
        previous: f64,
        last: f64,
    },

    #[error("imaginary residue {residue:e} exceeds tolerance relative to magnitude {magnitude:e} in {term}")]
    ImaginaryResidue {
        term: &'static str,
        residue: f64,
        magnitude: f64,
    },

    #[error("matrix is not unitary (defect {0:e})")]
    NonUnitary(f64),

    #[error("F2 grid does not match the requested evaluation: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

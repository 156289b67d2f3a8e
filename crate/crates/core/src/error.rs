use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two configurations have different total mass, so no coupling exists.
    #[error("configurations lie in different sectors (mass {left} vs {right})")]
    SectorMismatch { left: usize, right: usize },

    #[error("brute-force oracle limited to mass {cap}, got {mass}")]
    OracleTooLarge { mass: usize, cap: usize },

    #[error("sample values are not {lip}-Lipschitz: |{a} - {b}| > {lip} * {d}")]
    NotLipschitzOnA { a: f64, b: f64, d: f64, lip: f64 },

    #[error("gradient check failed for `{name}`: {detail}")]
    GradientCheck { name: String, detail: String },

    #[error("MCMC chain stuck: acceptance rate {rate} over burn-in")]
    ChainStuck { rate: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("step too large: drift displacement {displacement} exceeds half the window diameter {limit}")]
    StepTooLarge { displacement: f64, limit: f64 },

    #[error("insufficient paths at t = {t}: {hits} hits out of {paths}")]
    InsufficientPaths { t: f64, hits: u64, paths: u64 },

    #[error("starting configuration within {margin} of the window boundary (need {required})")]
    BoundaryContamination { margin: f64, required: f64 },

    #[error("no distance certificate for this pair of event sets")]
    NoDistanceCertificate,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

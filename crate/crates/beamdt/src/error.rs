//! Error type shared across the crate.

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("wavenumber must be positive and finite, got {0}")]
    InvalidWavenumber(f64),

    #[error("frequency out of range: |k| = {k} must be < k0 = {k0}")]
    FrequencyOutOfRange { k: f64, k0: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("disk of radius {radius} centered at ({cx}, {cy}) leaves the support disk of radius {r_s}")]
    SupportViolation {
        cx: f64,
        cy: f64,
        radius: f64,
        r_s: f64,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("angular quadrature too coarse: D = {d} must be at least 4N+4 = {min} for N = {n}")]
    QuadratureTooCoarse { d: usize, n: usize, min: usize },

    #[error("truncation level N = {n} needs 2N+1 <= D = {d} angular samples")]
    TruncationTooLarge { n: usize, d: usize },

    #[error("empty spectrum: every coefficient with |n| <= {n} lies at or below the singular-value floor {floor:e}; lower --min-singular or change the beam")]
    EmptySpectrum { n: usize, floor: f64 },

    #[error("evaluation point ({x}, {y}) coincides with a source pixel of nonzero scattering potential")]
    SingularEvaluation { x: f64, y: f64 },

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("invalid file format: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical modules and the harness.
#[derive(Debug, Error)]
pub enum KppError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query z = {z} outside window [{lo}, {hi}]")]
    OutOfWindow { z: f64, lo: f64, hi: f64 },

    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),

    #[error("tridiagonal solve produced non-finite values at t = {t}")]
    SolveFailure { t: f64 },

    #[error("window policy violated at t = {t}: {detail}")]
    WindowPolicy { t: f64, detail: String },

    #[error("no h = 1/2 crossing inside the window at t = {t}")]
    NoCrossing { t: f64 },

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("traveling-wave integration failed: {0}")]
    WaveDiverged(String),

    #[error("epsilon = {eps} outside the admissible range ({lo}, {hi})")]
    EpsilonRange { eps: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("gamma function pole at x = {0}")]
    GammaPole(f64),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("archive: {0}")]
    Archive(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KppError>;

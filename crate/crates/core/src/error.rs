use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: must be finite and > 0")]
    InvalidParams { name: &'static str, value: f64 },

    #[error("no endemic equilibrium: r0 = {r0} <= 1")]
    NoEndemicEquilibrium { r0: f64 },

    #[error("integration step too large: state left the nonnegative cone at t = {t}")]
    StepTooLarge { t: f64 },

    #[error("wavenumber must be positive, got {0}")]
    NonpositiveLambda(f64),

    #[error("subcritical: alpha_max(0) = {alpha_max_zero} <= 0, no minimal wave speed")]
    SubcriticalR0 { alpha_max_zero: f64 },

    #[error("speed {c} is not above the minimal wave speed {c_star}")]
    SpeedNotSupercritical { c: f64, c_star: f64 },

    #[error("instability detected at t = {t} (last stable time {last_stable})")]
    InstabilityDetected { t: f64, last_stable: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("epsilon = {0} outside (0, alpha_max(0)/(1+alpha))")]
    BadEpsilon(f64),

    #[error("gamma = {0} outside (0, sqrt(4D(alpha_max(0) - eps(1+alpha))))")]
    BadGamma(f64),

    #[error("diffusion mismatch: requires d_h = d_v = D")]
    UnequalDiffusion,

    #[error("need at least {needed} trace points after discarding transients, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("profile must be strictly positive (component x{component} at index {index})")]
    NonpositiveProfile { component: usize, index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

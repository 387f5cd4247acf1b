use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not found: {0}")]
    RootNotFound(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("escape not observed within {cap} steps")]
    EscapeNotObserved { cap: usize },

    #[error("{what} did not converge (last residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("{value} outside the valid range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("precision error: {0}")]
    Precision(String),

    #[error("resolution error: eps = {eps} is below 2/G = {min}")]
    Resolution { eps: f64, min: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("holonomy error: {0}")]
    Holonomy(String),

    #[error("insufficient signal: {significant} significant lags, need at least {needed}")]
    InsufficientSignal { significant: usize, needed: usize },

    #[error("degenerate orbit: {0}")]
    DegenerateOrbit(String),

    #[error("invalid profile: {0}")]
    Profile(String),
}

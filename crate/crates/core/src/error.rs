use thiserror::Error;

use crate::local_metrics::SphereStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point at radius {radius} lies outside the domain of {map}")]
    Domain { map: String, radius: f64 },

    #[error("unsupported map: {0}")]
    Unsupported(String),

    #[error("sphere extrema did not stabilise after {} samples (last relative change {})", .stats.samples, .stats.refine_error)]
    Precision { stats: SphereStats },

    #[error("radius {r} is not below r0 = {r0}")]
    Range { r: f64, r0: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("gate failed: {0}")]
    Gate(String),

    #[error("orbit left the basin: {0}")]
    Classification(String),

    #[error("theorem inapplicable: {0}")]
    Inapplicable(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use lipext_core::{ExtensionError, LiftError, MeasureError, MetricError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid metric: {0}")]
    Metric(#[from] MetricError),
    #[error("invalid measure: {0}")]
    Measure(#[from] MeasureError),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error("report: {0}")]
    Report(#[from] csv::Error),
}

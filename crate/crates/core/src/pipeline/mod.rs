//! The two hourly jobs, run in process with a deterministic worker pool.
//!
//! Job 1 maps logs to hospitals, groups them by hospital, sorts each group by
//! time tag and feeds it to that hospital's census state on the single worker
//! that owns it. Job 2 pairs each hospital's density history with its model.
//! Hospitals are assigned to workers by a stable hash, and every merge step
//! orders its input, so outputs do not depend on the worker count.

mod jobs;
mod runner;

pub use jobs::{run_job1, run_job2, train_all, CensusContext, Job1Output, Job2Output, JobPlan, Resolved};
pub use runner::{Ownership, PipelineConfig, PredictionManifest, RunManifest, Runner};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("log at {ts} lies outside the window starting {window_start}")]
    OutsideWindow { ts: i64, window_start: i64 },
    #[error("state chain broken: {0}")]
    StateChainBroken(String),
    #[error(transparent)]
    Grid(#[from] crate::geogrid::GridError),
    #[error(transparent)]
    Census(#[from] crate::census::CensusError),
    #[error(transparent)]
    Forecast(#[from] crate::forecast::ForecastError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[cfg(test)]
mod tests;

//! Forecast metrics and the end-to-end experiment driver.

mod experiment;
mod metrics;

pub use experiment::{
    census_accuracy, run_census, run_experiment, CensusAccuracy, CensusRun, ExperimentConfig, ExperimentError,
    ExperimentSummary, HorizonSummary, TrainingOutcome,
};

pub use metrics::{
    average_ranks, bucket_of, horizon_breakdown, mean_var, median, relative_error, srcc, summarize,
    HorizonBreakdown, MetricSummary, PredictionRecord, BUCKET_WIDTH, N_BUCKETS,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("rank correlation is undefined for constant or too-short input")]
    DegenerateInput,
    #[error("vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("relative error is undefined for zero truth")]
    ZeroTruth,
}

#[cfg(test)]
mod tests;

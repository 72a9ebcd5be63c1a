//! Recommendation service: crowd levels, ranked hospital lists and the JSON
//! API over a pipeline state directory.
//!
//! Reads never modify state. The only writer is the simulation step, and at
//! most one step runs at a time; a second concurrent request gets 409.

mod rank;
mod server;

pub use rank::{haversine, order, CrowdConfig, CrowdLevel, Criteria, LatLng, Level, RankedEntry, Ranker, Weights};
pub use server::{
    router, serve, Advanced, ApiError, AppState, DensityCurve, ErrorBody, HospitalDetail, ObservedPoint,
    PredictedPoint, ServeConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum RecError {
    #[error("no hospitals to rank")]
    NoHospitals,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("location out of range")]
    InvalidLocation,
    #[error("invalid service config: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Confidence-weighted outpatient counting per hospital.
//!
//! Each resolved log carries a confidence that the person is really inside
//! the hospital. A per-hospital [`HospitalState`] keeps a counting list of
//! people currently present, decays their confidence every 15 minutes and
//! moves long stays and frequent visitors (inpatients, staff, residents) to a
//! blacklist. The outpatient estimate is the sum of confidences of items that
//! have stayed longer than 20 minutes.

mod confidence;
mod state;
mod store;

pub use confidence::{ConfidenceModel, DEFAULT_SAMPLES, MIN_SAMPLES};
pub use state::{
    BlacklistEntry, BlacklistReason, CensusConfig, CombineMode, CountingItem, DensitySnapshot, HospitalState,
};
pub use store::{read_density_csv, write_density_csv, STATE_MAGIC, STATE_VERSION};

use crate::HospitalId;

#[derive(Debug, thiserror::Error)]
pub enum CensusError {
    #[error("hospital {hospital_id}: log at {ts} precedes processed frontier {frontier}")]
    OutOfOrder {
        hospital_id: HospitalId,
        ts: i64,
        frontier: i64,
    },
    #[error("confidence model needs at least 16 samples, got {0}")]
    TooFewSamples(usize),
    #[error("not a census state file")]
    BadMagic,
    #[error("census state version {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt census state: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

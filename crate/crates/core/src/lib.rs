//! Outpatient crowd density for hospitals, estimated from anonymous location
//! logs.
//!
//! The crate is organised the way the data flows:
//!
//! * [`geogrid`] maps noisy coordinates onto 2 m cells and resolves each log to
//!   the hospital whose polygon owns the cell (cuckoo filter + exact payload).
//! * [`census`] turns resolved logs into per-hospital counting lists and
//!   blacklists and reports confidence-weighted outpatient counts.
//! * [`forecast`] trains a per-hospital dual-window recurrent network and
//!   predicts the next 24 hours every two hours.
//! * [`pipeline`] runs the two hourly map/shuffle/reduce jobs in process with a
//!   deterministic worker pool and persisted state.
//! * [`recsvc`] ranks hospitals for a user and serves the JSON API.
//! * [`evalkit`] holds the metrics and the end-to-end experiment driver.
//! * [`synth`] generates a labelled synthetic city to test all of the above.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists them.

pub mod census;
pub mod evalkit;
pub mod forecast;
pub mod geogrid;
pub mod hashing;
pub mod pipeline;
pub mod recsvc;
pub mod synth;
mod types;

pub use types::{HospitalId, LbsLog, Uid};

/// Seconds in one hour.
pub const HOUR: i64 = 3600;
/// Seconds in one day.
pub const DAY: i64 = 86_400;
/// Hours in one week.
pub const WEEK_HOURS: usize = 168;

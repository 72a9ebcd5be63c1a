use std::fmt;

use serde::{Deserialize, Serialize};

/// Small integer identifying a hospital in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HospitalId(pub u32);

impl fmt::Display for HospitalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Anonymous user id carried by every location log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Uid(pub u64);

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One anonymized location request.
///
/// `lat`/`lng` are the observed coordinates in degrees; the true position is
/// guaranteed (in the 3σ sense) to lie within `r` meters of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbsLog {
    pub uid: Uid,
    pub ts: i64,
    pub lat: f64,
    pub lng: f64,
    pub r: f64,
}

impl LbsLog {
    /// Total order used by the shuffle: time tag first, then uid, then the
    /// remaining fields bitwise so duplicates sort reproducibly.
    pub fn sort_key(&self) -> (i64, u64, u64, u64, u64) {
        (
            self.ts,
            self.uid.0,
            self.lat.to_bits(),
            self.lng.to_bits(),
            self.r.to_bits(),
        )
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RecError;
use crate::census::DensitySnapshot;
use crate::geogrid::{GridConfig, HospitalRecord};
use crate::HospitalId;

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A WGS-84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLng {
    pub lat: f64,
    pub lng: f64,
}

impl LatLng {
    pub fn new(lat: f64, lng: f64) -> Self {
        LatLng { lat, lng }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lng)
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: LatLng, b: LatLng) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lng - a.lng).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Idle,
    Normal,
    Busy,
    Crowded,
}

/// Capacity model behind the crowd levels. Load is
/// `n_total / (n_doctors * patients_per_doctor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrowdConfig {
    pub patients_per_doctor: f64,
    /// Lowest load that is `Normal`, `Busy` and `Crowded`, ascending.
    pub thresholds: [f64; 3],
}

impl Default for CrowdConfig {
    fn default() -> Self {
        CrowdConfig {
            patients_per_doctor: 3.0,
            thresholds: [0.5, 1.0, 1.5],
        }
    }
}

impl CrowdConfig {
    pub fn validate(&self) -> Result<(), RecError> {
        let [a, b, c] = self.thresholds;
        if !(self.patients_per_doctor > 0.0 && self.patients_per_doctor.is_finite()) {
            return Err(RecError::Config("patients_per_doctor must be positive".into()));
        }
        if !(0.0 < a && a < b && b < c && c.is_finite()) {
            return Err(RecError::Config("crowd thresholds must be positive and strictly ascending".into()));
        }
        Ok(())
    }

    pub fn level_of(&self, load: f64) -> Level {
        let [normal, busy, crowded] = self.thresholds;
        if load >= crowded {
            Level::Crowded
        } else if load >= busy {
            Level::Busy
        } else if load >= normal {
            Level::Normal
        } else {
            Level::Idle
        }
    }

    pub fn assess(&self, n_total: f64, n_doctors: u32) -> CrowdLevel {
        let load = n_total / (f64::from(n_doctors.max(1)) * self.patients_per_doctor);
        CrowdLevel {
            level: self.level_of(load),
            load,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdLevel {
    pub level: Level,
    pub load: f64,
}

/// Relative importance of distance, crowding and official class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub distance: f64,
    pub crowd: f64,
    pub class: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            distance: 0.4,
            crowd: 0.4,
            class: 0.2,
        }
    }
}

impl Weights {
    pub fn new(distance: f64, crowd: f64, class: f64) -> Result<Self, RecError> {
        let w = Weights { distance, crowd, class };
        let all = [distance, crowd, class];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RecError::InvalidWeights("weights must be finite and non-negative".into()));
        }
        if all.iter().all(|v| *v == 0.0) {
            return Err(RecError::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(w)
    }

    fn normalized(&self) -> [f64; 3] {
        let sum = self.distance + self.crowd + self.class;
        [self.distance / sum, self.crowd / sum, self.class / sum]
    }
}

/// Raw ranking inputs of one hospital; smaller is better on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria {
    pub hospital_id: HospitalId,
    pub distance_m: f64,
    pub load: f64,
    pub official_class: u8,
}

/// Scores are compared on this grid so that rescaling the weights, which
/// perturbs them by a few ulps, cannot reorder entries.
const SCORE_QUANTUM: f64 = 1e-9;

fn quantize(score: f64) -> i64 {
    (score / SCORE_QUANTUM).round() as i64
}

/// Scores every entry and returns `(index, score)` pairs best first.
///
/// Distance and load are divided by their per-request maxima, class by 9, and
/// the weights are normalized to sum to one. Equal quantized scores fall back
/// to distance, load, class and finally hospital id.
pub fn order(criteria: &[Criteria], weights: &Weights) -> Vec<(usize, f64)> {
    let max_distance = criteria.iter().map(|c| c.distance_m).fold(0.0, f64::max);
    let max_load = criteria.iter().map(|c| c.load).fold(0.0, f64::max);
    let ratio = |v: f64, max: f64| if max > 0.0 { v / max } else { 0.0 };
    let [wd, wc, wk] = weights.normalized();
    let mut scored: Vec<(usize, f64)> = criteria
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let score = wd * ratio(c.distance_m, max_distance)
                + wc * ratio(c.load, max_load)
                + wk * (f64::from(c.official_class) / 9.0);
            (i, score)
        })
        .collect();
    scored.sort_by(|&(i, si), &(j, sj)| {
        let (a, b) = (&criteria[i], &criteria[j]);
        quantize(si)
            .cmp(&quantize(sj))
            .then(a.distance_m.total_cmp(&b.distance_m))
            .then(a.load.total_cmp(&b.load))
            .then(a.official_class.cmp(&b.official_class))
            .then(a.hospital_id.cmp(&b.hospital_id))
    });
    scored
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub hospital_id: HospitalId,
    pub name: String,
    pub official_class: u8,
    pub distance_m: f64,
    pub crowd: CrowdLevel,
    pub score: f64,
}

/// Turns catalog records and current snapshots into a recommendation list.
#[derive(Debug, Clone, Copy)]
pub struct Ranker {
    pub grid: GridConfig,
    pub crowd: CrowdConfig,
}

impl Ranker {
    pub fn new(grid: GridConfig, crowd: CrowdConfig) -> Self {
        Ranker { grid, crowd }
    }

    pub fn crowd_of(&self, hospital: &HospitalRecord, snapshot: Option<&DensitySnapshot>) -> CrowdLevel {
        self.crowd.assess(snapshot.map_or(0.0, |s| s.n_total), hospital.n_doctors)
    }

    /// Hospitals without a snapshot count as empty.
    pub fn rank(
        &self,
        user: LatLng,
        hospitals: &[HospitalRecord],
        snapshots: &BTreeMap<HospitalId, DensitySnapshot>,
        weights: &Weights,
    ) -> Result<Vec<RankedEntry>, RecError> {
        if hospitals.is_empty() {
            return Err(RecError::NoHospitals);
        }
        let crowds: Vec<CrowdLevel> = hospitals
            .iter()
            .map(|h| self.crowd_of(h, snapshots.get(&h.hospital_id)))
            .collect();
        let criteria: Vec<Criteria> = hospitals
            .iter()
            .zip(&crowds)
            .map(|(h, crowd)| {
                let (lat, lng) = h.centroid(&self.grid);
                Criteria {
                    hospital_id: h.hospital_id,
                    distance_m: haversine(user, LatLng::new(lat, lng)),
                    load: crowd.load,
                    official_class: h.official_class,
                }
            })
            .collect();
        Ok(order(&criteria, weights)
            .into_iter()
            .map(|(i, score)| RankedEntry {
                hospital_id: hospitals[i].hospital_id,
                name: hospitals[i].name.clone(),
                official_class: hospitals[i].official_class,
                distance_m: criteria[i].distance_m,
                crowd: crowds[i],
                score,
            })
            .collect())
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CensusError;
use crate::{HospitalId, Uid, DAY, HOUR};

/// How a new confidence is folded into an item's running confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CombineMode {
    /// `min(ĉ + c, 1)`.
    Clamp,
    /// `(ĉ + c) mod 1`; two confident sightings can wrap to almost nothing.
    Mod1,
}

impl CombineMode {
    pub fn combine(self, current: f64, incoming: f64) -> f64 {
        let sum = current + incoming;
        match self {
            CombineMode::Clamp => sum.min(1.0),
            CombineMode::Mod1 => sum.rem_euclid(1.0),
        }
    }
}

/// Thresholds of the counting rules. Defaults follow the deployed system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusConfig {
    pub mode: CombineMode,
    /// Residence above this makes an item a patient.
    pub patient_after_s: i64,
    /// Residence above this blacklists the uid as a long stay.
    pub long_stay_s: i64,
    /// More distinct observation days than this within `window_days`
    /// blacklists the uid as frequent.
    pub frequent_days: usize,
    pub window_days: i64,
    pub tick_s: i64,
    /// Items whose confidence decays to this value or below are deleted.
    pub delete_at: f64,
    /// Blacklist entries idle this long are evicted.
    pub blacklist_idle_s: i64,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            mode: CombineMode::Clamp,
            patient_after_s: 1200,
            long_stay_s: 15 * HOUR,
            frequent_days: 3,
            window_days: 7,
            tick_s: 900,
            delete_at: 1.0 / 65536.0,
            blacklist_idle_s: 10 * DAY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountingItem {
    pub first_seen: i64,
    pub last_seen: i64,
    /// `last_seen − first_seen` of the current visit.
    pub res_time: i64,
    pub c_hat: f64,
    pub is_patient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlacklistReason {
    LongStay,
    Frequent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlacklistEntry {
    pub reason: BlacklistReason,
    pub last_seen: i64,
    /// Distinct day numbers (`ts / 86400`) with a sighting inside the trailing
    /// window, ascending.
    pub observed_days: Vec<i64>,
}

/// Confidence-weighted outpatient count at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySnapshot {
    pub hospital_id: HospitalId,
    pub ts: i64,
    pub n_total: f64,
    pub n_over_2h: f64,
    pub n_over_4h: f64,
    pub n_over_6h: f64,
}

impl DensitySnapshot {
    pub fn empty(hospital_id: HospitalId, ts: i64) -> Self {
        DensitySnapshot {
            hospital_id,
            ts,
            n_total: 0.0,
            n_over_2h: 0.0,
            n_over_4h: 0.0,
            n_over_6h: 0.0,
        }
    }
}

/// Counting list and blacklist of one hospital.
///
/// Maps are ordered by uid so sums and serialized bytes do not depend on
/// insertion history.
#[derive(Debug, Clone, PartialEq)]
pub struct HospitalState {
    pub(super) hospital_id: HospitalId,
    pub(super) config: CensusConfig,
    pub(super) items: BTreeMap<Uid, CountingItem>,
    pub(super) blacklist: BTreeMap<Uid, BlacklistEntry>,
    /// Observation days of uids not (yet) blacklisted; outlives items so
    /// repeat visitors are caught across visits.
    pub(super) sightings: BTreeMap<Uid, Vec<i64>>,
    /// Last tick boundary applied. Always a multiple of `tick_s`.
    pub(super) last_tick_ts: i64,
    /// Latest ingested timestamp.
    pub(super) frontier: i64,
}

fn day_of(ts: i64) -> i64 {
    ts.div_euclid(DAY)
}

/// Inserts `day` into a sorted day list and drops days that left the
/// trailing window ending on `day`.
fn note_day(days: &mut Vec<i64>, day: i64, window_days: i64) {
    if let Err(pos) = days.binary_search(&day) {
        days.insert(pos, day);
    }
    days.retain(|&d| d > day - window_days);
}

impl HospitalState {
    /// Fresh state whose tick clock starts at the tick boundary at or before
    /// `origin_ts`.
    pub fn new(hospital_id: HospitalId, config: CensusConfig, origin_ts: i64) -> Self {
        let aligned = origin_ts.div_euclid(config.tick_s) * config.tick_s;
        HospitalState {
            hospital_id,
            config,
            items: BTreeMap::new(),
            blacklist: BTreeMap::new(),
            sightings: BTreeMap::new(),
            last_tick_ts: aligned,
            frontier: aligned,
        }
    }

    pub fn hospital_id(&self) -> HospitalId {
        self.hospital_id
    }

    pub fn config(&self) -> &CensusConfig {
        &self.config
    }

    pub fn last_tick_ts(&self) -> i64 {
        self.last_tick_ts
    }

    pub fn frontier(&self) -> i64 {
        self.frontier
    }

    pub fn items(&self) -> &BTreeMap<Uid, CountingItem> {
        &self.items
    }

    pub fn item(&self, uid: Uid) -> Option<&CountingItem> {
        self.items.get(&uid)
    }

    pub fn blacklist(&self) -> &BTreeMap<Uid, BlacklistEntry> {
        &self.blacklist
    }

    pub fn blacklisted(&self, uid: Uid) -> Option<BlacklistReason> {
        self.blacklist.get(&uid).map(|e| e.reason)
    }

    /// Applies every tick boundary strictly before `now`. Events stamped
    /// exactly on a boundary are processed before that boundary's tick.
    pub fn advance_to(&mut self, now: i64) {
        while self.last_tick_ts + self.config.tick_s < now {
            let boundary = self.last_tick_ts + self.config.tick_s;
            self.tick(boundary);
        }
    }

    /// One decay step at `boundary`: halves every confidence, deletes items
    /// that decay to the threshold, evicts idle blacklist entries and stale
    /// sightings.
    pub fn tick(&mut self, boundary: i64) {
        let delete_at = self.config.delete_at;
        self.items.retain(|_, item| {
            item.c_hat *= 0.5;
            item.c_hat > delete_at
        });
        let idle = self.config.blacklist_idle_s;
        self.blacklist.retain(|_, e| boundary - e.last_seen < idle);
        let oldest_kept = day_of(boundary) - self.config.window_days;
        self.sightings.retain(|_, days| days.last().is_some_and(|&d| d > oldest_kept));
        self.last_tick_ts = self.last_tick_ts.max(boundary);
        self.frontier = self.frontier.max(boundary);
    }

    /// Folds one resolved sighting of `uid` with confidence `c` into the
    /// state. Pending tick boundaries before `ts` are applied first.
    pub fn ingest(&mut self, uid: Uid, ts: i64, c: f64) -> Result<(), CensusError> {
        if ts < self.frontier {
            return Err(CensusError::OutOfOrder {
                hospital_id: self.hospital_id,
                ts,
                frontier: self.frontier,
            });
        }
        self.advance_to(ts);
        self.frontier = ts;
        let cfg = self.config;
        let day = day_of(ts);

        if let Some(entry) = self.blacklist.get_mut(&uid) {
            entry.last_seen = ts;
            note_day(&mut entry.observed_days, day, cfg.window_days);
            return Ok(());
        }

        let days = self.sightings.entry(uid).or_default();
        note_day(days, day, cfg.window_days);
        if days.len() > cfg.frequent_days {
            let observed_days = self.sightings.remove(&uid).unwrap_or_default();
            self.items.remove(&uid);
            self.blacklist.insert(
                uid,
                BlacklistEntry {
                    reason: BlacklistReason::Frequent,
                    last_seen: ts,
                    observed_days,
                },
            );
            return Ok(());
        }

        let item = self
            .items
            .entry(uid)
            .and_modify(|item| {
                item.last_seen = ts;
                item.res_time = ts - item.first_seen;
                item.c_hat = cfg.mode.combine(item.c_hat, c);
            })
            .or_insert_with(|| CountingItem {
                first_seen: ts,
                last_seen: ts,
                res_time: 0,
                c_hat: cfg.mode.combine(0.0, c),
                is_patient: false,
            });
        if item.res_time > cfg.patient_after_s {
            item.is_patient = true;
        }
        if item.res_time > cfg.long_stay_s {
            self.items.remove(&uid);
            let observed_days = self.sightings.remove(&uid).unwrap_or_default();
            self.blacklist.insert(
                uid,
                BlacklistEntry {
                    reason: BlacklistReason::LongStay,
                    last_seen: ts,
                    observed_days,
                },
            );
        }
        Ok(())
    }

    /// Confidence-weighted patient count, with residence-time strata.
    pub fn snapshot(&self, ts: i64) -> DensitySnapshot {
        let mut snap = DensitySnapshot::empty(self.hospital_id, ts);
        for item in self.items.values().filter(|i| i.is_patient) {
            snap.n_total += item.c_hat;
            if item.res_time > 2 * HOUR {
                snap.n_over_2h += item.c_hat;
            }
            if item.res_time > 4 * HOUR {
                snap.n_over_4h += item.c_hat;
            }
            if item.res_time > 6 * HOUR {
                snap.n_over_6h += item.c_hat;
            }
        }
        snap
    }

    /// Brings the tick clock up to `end` and snapshots there; the tick on
    /// `end` itself is left for the next window.
    pub fn close_window(&mut self, end: i64) -> DensitySnapshot {
        self.advance_to(end);
        self.frontier = self.frontier.max(end);
        self.snapshot(end)
    }
}

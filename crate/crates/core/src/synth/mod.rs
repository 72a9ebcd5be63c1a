//! Synthetic city, labelled agents and noisy location logs.
//!
//! Stands in for proprietary location data: every log carries a known true
//! position and every agent a known behaviour class, so the census and the
//! forecaster can be scored against ground truth.

mod config;
mod io;
mod world;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

pub use config::{AgentMix, ArrivalProfile, WorldConfig, DEFAULT_START_TS};
pub use io::{read_logs, write_labels_jsonl, write_logs, write_truth_csv};
pub use world::{gen_world, Agent, AgentKind, Path, Site, Visit, World};

use crate::geogrid::unproject;
use crate::hashing::combine;
use crate::{HospitalId, LbsLog, Uid, HOUR};

/// Outpatients count towards the truth once on site this long.
pub const TRUTH_MIN_PRESENCE_S: i64 = 1200;
const LOG_TAG: u64 = 0x4C4F_4753;
const BACKGROUND_TAG: u64 = 0x4247_4E44;
const BACKGROUND_UID_BASE: u64 = 1 << 60;
const BACKGROUND_POPULATION: u64 = 1 << 24;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid world config: {0}")]
    Config(String),
    #[error("could only place {placed} of {wanted} disjoint hospitals")]
    Placement { placed: usize, wanted: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut words = vec![seed];
    words.extend_from_slice(parts);
    ChaCha8Rng::seed_from_u64(combine(&words))
}

/// Per-hospital hourly outpatient counts plus agent labels.
///
/// `counts[k][h]` is the number of outpatients at `hospital_ids[k]` who are on
/// site at the end of simulation hour `h` and have been there for at least
/// 20 minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub start_ts: i64,
    pub hospital_ids: Vec<HospitalId>,
    pub counts: Vec<Vec<u32>>,
    /// Sorted by uid.
    pub labels: Vec<(Uid, AgentKind)>,
}

impl GroundTruth {
    pub fn hours(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn series(&self, id: HospitalId) -> Option<&[u32]> {
        let k = self.hospital_ids.iter().position(|&h| h == id)?;
        Some(&self.counts[k])
    }

    pub fn label(&self, uid: Uid) -> Option<AgentKind> {
        self.labels
            .binary_search_by_key(&uid, |&(u, _)| u)
            .ok()
            .map(|i| self.labels[i].1)
    }
}

/// Logs sorted by time, with the matching truth.
#[derive(Debug, Clone)]
pub struct SynthLogs {
    pub logs: Vec<LbsLog>,
    /// `inside[i]`: the true position of `logs[i]` is inside a hospital polygon.
    pub inside: Vec<bool>,
    pub truth: GroundTruth,
}

impl SynthLogs {
    /// Logs with `ts` in `[from, to)`.
    pub fn window(&self, from: i64, to: i64) -> &[LbsLog] {
        let a = self.logs.partition_point(|l| l.ts < from);
        let b = self.logs.partition_point(|l| l.ts < to);
        &self.logs[a..b]
    }
}

fn noisy(world: &World, x: f64, y: f64, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    // r log-uniform in [10, 100] m; true offset ~ N(0, (r/3)²) per axis.
    let r = (rng.random_range(10f64.ln()..100f64.ln())).exp();
    let sigma = r / 3.0 * world.cfg.noise_mismatch;
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    (x + sigma * nx, y + sigma * ny, r)
}

fn make_log(world: &World, uid: Uid, ts: i64, x: f64, y: f64, rng: &mut ChaCha8Rng) -> LbsLog {
    let (ox, oy, r) = noisy(world, x, y, rng);
    let (lat, lng) = unproject(ox, oy, &world.cfg.grid);
    LbsLog { uid, ts, lat, lng, r }
}

fn inside_any(world: &World, x: f64, y: f64) -> bool {
    world.sites.iter().any(|s| s.polygon.contains(x, y))
}

/// Emits every agent's logs and the background population's, sorted by
/// `(ts, uid)`, together with the ground truth.
pub fn gen_logs(world: &World) -> SynthLogs {
    let cfg = &world.cfg;
    let (start, end) = (cfg.start_ts, cfg.end_ts());
    let gap = Exp::new(1.0 / cfg.log_interval_s).expect("positive interval");
    let mut tagged: Vec<(LbsLog, bool)> = Vec::new();

    for agent in &world.agents {
        let mut rng = rng_for(cfg.seed, &[LOG_TAG, agent.uid.0]);
        for visit in &agent.schedule {
            let site = world.site(visit.hospital_id).expect("visit to known hospital");
            let span = (visit.depart_ts - visit.arrive_ts).max(1) as f64;
            let mut t = visit.arrive_ts as f64;
            loop {
                t += gap.sample(&mut rng);
                if t >= visit.depart_ts as f64 {
                    break;
                }
                let ts = t.floor() as i64;
                if ts < start || ts >= end {
                    continue;
                }
                let (x, y) = visit.path.at((t - visit.arrive_ts as f64) / span);
                let log = make_log(world, agent.uid, ts, x, y, &mut rng);
                tagged.push((log, site.polygon.contains(x, y)));
            }
        }
    }

    let half = cfg.city_extent_m / 2.0;
    for h in 0..cfg.total_hours() {
        let mut rng = rng_for(cfg.seed, &[BACKGROUND_TAG, h as u64]);
        let n = poisson(&mut rng, cfg.background_logs_per_hour);
        for _ in 0..n {
            let uid = Uid(BACKGROUND_UID_BASE + rng.random_range(0..BACKGROUND_POPULATION));
            let ts = start + h as i64 * HOUR + rng.random_range(0..HOUR);
            let (x, y) = (rng.random_range(-half..half), rng.random_range(-half..half));
            let log = make_log(world, uid, ts, x, y, &mut rng);
            tagged.push((log, inside_any(world, x, y)));
        }
    }

    tagged.sort_by_key(|(l, _)| l.sort_key());
    let (logs, inside) = tagged.into_iter().unzip();
    SynthLogs {
        logs,
        inside,
        truth: ground_truth(world),
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Hourly outpatient truth and labels, computed from schedules alone.
pub fn ground_truth(world: &World) -> GroundTruth {
    let cfg = &world.cfg;
    let hours = cfg.total_hours();
    let hospital_ids: Vec<HospitalId> = world.hospitals.iter().map(|h| h.hospital_id).collect();
    let mut counts = vec![vec![0u32; hours]; hospital_ids.len()];
    for agent in world.agents.iter().filter(|a| a.kind == AgentKind::Outpatient) {
        for v in &agent.schedule {
            let k = hospital_ids
                .iter()
                .position(|&h| h == v.hospital_id)
                .expect("known hospital");
            // Hour h ends at start + (h+1)·3600; count it when
            // arrive + 20 min ≤ end < depart.
            let first_end = v.arrive_ts + TRUTH_MIN_PRESENCE_S;
            let lo = (first_end - cfg.start_ts + HOUR - 1).div_euclid(HOUR) - 1;
            for h in lo.max(0)..hours as i64 {
                let end = cfg.start_ts + (h + 1) * HOUR;
                if end >= v.depart_ts {
                    break;
                }
                if end >= first_end {
                    counts[k][h as usize] += 1;
                }
            }
        }
    }
    let mut labels: Vec<(Uid, AgentKind)> = world.agents.iter().map(|a| (a.uid, a.kind)).collect();
    labels.sort_unstable();
    GroundTruth {
        start_ts: cfg.start_ts,
        hospital_ids,
        counts,
        labels,
    }
}

/// One dense hour of logs for throughput tests: `hospital_share` of the logs
/// come from people on site at random hospitals (about 20 logs each), the
/// rest from the background population.
pub fn stress_hour(world: &World, hour_start: i64, n_logs: usize, hospital_share: f64, seed: u64) -> Vec<LbsLog> {
    let mut rng = rng_for(seed, &[0x5354_5245]);
    let half = world.cfg.city_extent_m / 2.0;
    let mut spots: Vec<(f64, f64)> = Vec::new();
    let mut logs = Vec::with_capacity(n_logs);
    for _ in 0..n_logs {
        let ts = hour_start + rng.random_range(0..HOUR);
        if rng.random_bool(hospital_share.clamp(0.0, 1.0)) && !world.sites.is_empty() {
            let person = rng.random_range(0..(n_logs as f64 * hospital_share / 20.0).max(1.0) as u64);
            while spots.len() <= person as usize {
                let site = &world.sites[spots.len() % world.sites.len()];
                let ((x0, y0), (x1, y1)) = site.core.bbox();
                let spot = loop {
                    let (x, y) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
                    if site.core.contains(x, y) {
                        break (x, y);
                    }
                };
                spots.push(spot);
            }
            let (x, y) = spots[person as usize];
            logs.push(make_log(world, Uid((1 << 50) + person), ts, x, y, &mut rng));
        } else {
            let uid = Uid(BACKGROUND_UID_BASE + rng.random_range(0..BACKGROUND_POPULATION));
            let (x, y) = (rng.random_range(-half..half), rng.random_range(-half..half));
            logs.push(make_log(world, uid, ts, x, y, &mut rng));
        }
    }
    logs.sort_by_key(|l| l.sort_key());
    logs
}

#[cfg(test)]
mod tests;

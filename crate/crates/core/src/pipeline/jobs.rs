use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::census::{CensusConfig, ConfidenceModel, DensitySnapshot, HospitalState};
use crate::forecast::{predict_schedule, DualNet, PredictionRow};
use crate::geogrid::{GridIndex, HospitalRecord, PlanarPolygon};
use crate::hashing::fnv1a64;
use crate::{HospitalId, LbsLog, Uid, HOUR};

/// How hospitals are spread over workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPlan {
    n_workers: usize,
}

impl JobPlan {
    pub fn new(n_workers: usize) -> Result<Self, PipelineError> {
        if n_workers == 0 {
            return Err(PipelineError::Config("need at least one worker".into()));
        }
        Ok(JobPlan { n_workers })
    }

    pub fn n_workers(&self) -> usize {
        self.n_workers
    }

    /// FNV-1a of the little-endian id, modulo the worker count.
    pub fn worker_of(&self, hospital: HospitalId) -> usize {
        (fnv1a64(&hospital.0.to_le_bytes()) % self.n_workers as u64) as usize
    }
}

/// A log that resolved to a hospital, with its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub ts: i64,
    pub uid: Uid,
    pub confidence: f64,
}

impl Resolved {
    fn key(&self) -> (i64, u64, u64) {
        (self.ts, self.uid.0, self.confidence.to_bits())
    }
}

/// Everything the map phase needs, immutable for the whole run.
#[derive(Debug, Clone)]
pub struct CensusContext {
    pub index: GridIndex,
    pub polygons: BTreeMap<HospitalId, PlanarPolygon>,
    pub model: ConfidenceModel,
    pub census: CensusConfig,
    pub seed: u64,
}

impl CensusContext {
    pub fn new(index: GridIndex, hospitals: &[HospitalRecord], model: ConfidenceModel, census: CensusConfig, seed: u64) -> Self {
        let polygons = hospitals
            .iter()
            .map(|h| (h.hospital_id, h.planar(index.config())))
            .collect();
        CensusContext {
            index,
            polygons,
            model,
            census,
            seed,
        }
    }

    pub fn hospital_ids(&self) -> impl Iterator<Item = HospitalId> + '_ {
        self.polygons.keys().copied()
    }

    /// Resolves one log and, on a hit, scores it against the owning polygon.
    pub fn resolve(&self, log: &LbsLog) -> Option<(HospitalId, Resolved)> {
        let id = self.index.resolve(log)?;
        let polygon = self.polygons.get(&id)?;
        Some((
            id,
            Resolved {
                ts: log.ts,
                uid: log.uid,
                confidence: self.model.of_log(log, polygon, self.index.config(), self.seed),
            },
        ))
    }

    pub fn fresh_states(&self, origin_ts: i64) -> BTreeMap<HospitalId, HospitalState> {
        self.hospital_ids()
            .map(|id| (id, HospitalState::new(id, self.census, origin_ts)))
            .collect()
    }
}

/// Output of one hourly census job.
#[derive(Debug, Clone, PartialEq)]
pub struct Job1Output {
    /// End-of-window snapshots in hospital order.
    pub snapshots: Vec<DensitySnapshot>,
    pub n_logs: usize,
    pub n_resolved: usize,
    /// `(hospital, worker)` pairs; each hospital appears once.
    pub ownership: Vec<(HospitalId, usize)>,
}

fn shards<T>(items: &[T], n: usize) -> impl Iterator<Item = &[T]> {
    let size = items.len().div_ceil(n).max(1);
    items.chunks(size)
}

/// Map (resolve + confidence), shuffle (group by hospital, sort by time tag)
/// and reduce (census ingest, end-of-window snapshot) over the logs of
/// `[window_start, window_start + 1 h)`.
///
/// `states` must hold one state per hospital of `ctx`. Results do not depend
/// on the worker count.
pub fn run_job1(
    plan: &JobPlan,
    ctx: &CensusContext,
    window_start: i64,
    logs: &[LbsLog],
    states: &mut BTreeMap<HospitalId, HospitalState>,
) -> Result<Job1Output, PipelineError> {
    let window_end = window_start + HOUR;
    if let Some(bad) = logs.iter().find(|l| l.ts < window_start || l.ts >= window_end) {
        return Err(PipelineError::OutsideWindow {
            ts: bad.ts,
            window_start,
        });
    }
    if let Some(id) = ctx.hospital_ids().find(|id| !states.contains_key(id)) {
        return Err(PipelineError::StateChainBroken(format!("no census state for hospital {id}")));
    }

    // Map.
    let mapped: Vec<Vec<(HospitalId, Resolved)>> = std::thread::scope(|s| {
        let handles: Vec<_> = shards(logs, plan.n_workers())
            .map(|shard| s.spawn(move || shard.iter().filter_map(|l| ctx.resolve(l)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("map worker panicked")).collect()
    });

    // Shuffle.
    let mut groups: BTreeMap<HospitalId, Vec<Resolved>> = BTreeMap::new();
    let mut n_resolved = 0;
    for (id, r) in mapped.into_iter().flatten() {
        n_resolved += 1;
        groups.entry(id).or_default().push(r);
    }
    for group in groups.values_mut() {
        group.sort_by_key(Resolved::key);
    }

    // Reduce: each worker takes sole ownership of its hospitals' states.
    let mut bundles: Vec<Vec<(HospitalState, Vec<Resolved>)>> = vec![Vec::new(); plan.n_workers()];
    let mut ownership = Vec::new();
    for id in ctx.hospital_ids() {
        let w = plan.worker_of(id);
        let state = states.remove(&id).expect("checked above");
        bundles[w].push((state, groups.remove(&id).unwrap_or_default()));
        ownership.push((id, w));
    }
    let reduced: Vec<Result<Vec<(HospitalState, DensitySnapshot)>, PipelineError>> = std::thread::scope(|s| {
        let handles: Vec<_> = bundles
            .into_iter()
            .map(|bundle| {
                s.spawn(move || {
                    bundle
                        .into_iter()
                        .map(|(mut state, group)| {
                            for r in group {
                                state.ingest(r.uid, r.ts, r.confidence)?;
                            }
                            let snap = state.close_window(window_end);
                            Ok((state, snap))
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("reduce worker panicked")).collect()
    });
    let mut snapshots = Vec::new();
    for part in reduced {
        for (state, snap) in part? {
            snapshots.push(snap);
            states.insert(state.hospital_id(), state);
        }
    }
    snapshots.sort_by_key(|s| s.hospital_id);
    Ok(Job1Output {
        snapshots,
        n_logs: logs.len(),
        n_resolved,
        ownership,
    })
}

/// Output of one forecasting job.
#[derive(Debug, Clone, PartialEq)]
pub struct Job2Output {
    /// Hospital order, then horizon.
    pub rows: Vec<PredictionRow>,
    /// Hospitals without a model, or without enough history.
    pub skipped: Vec<(HospitalId, String)>,
}

/// Pairs each hospital's hourly history with its model and predicts hours
/// `now..now+24`. `issued_ts` labels the rows.
pub fn run_job2(
    plan: &JobPlan,
    histories: &BTreeMap<HospitalId, Vec<f64>>,
    models: &BTreeMap<HospitalId, DualNet>,
    now: usize,
    issued_ts: i64,
) -> Job2Output {
    let mut bundles: Vec<Vec<HospitalId>> = vec![Vec::new(); plan.n_workers()];
    for &id in histories.keys() {
        bundles[plan.worker_of(id)].push(id);
    }
    type Outcome = (HospitalId, Result<Vec<f64>, String>);
    let outcomes: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = bundles
            .into_iter()
            .map(|ids| {
                s.spawn(move || {
                    ids.into_iter()
                        .map(|id| {
                            let result = match models.get(&id) {
                                None => Err("model missing".to_string()),
                                Some(net) => predict_schedule(net, &histories[&id], now).map_err(|e| e.to_string()),
                            };
                            (id, result)
                        })
                        .collect::<Vec<Outcome>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("forecast worker panicked"))
            .collect()
    });
    let mut outcomes = outcomes;
    outcomes.sort_by_key(|(id, _)| *id);
    let mut out = Job2Output {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for (id, result) in outcomes {
        match result {
            Ok(values) => out.rows.extend(values.into_iter().enumerate().map(|(h, value)| PredictionRow {
                hospital_id: id,
                issued_ts,
                horizon_hour: h as u32 + 1,
                value,
            })),
            Err(reason) => {
                log::warn!("hospital {id}: forecast skipped: {reason}");
                out.skipped.push((id, reason));
            }
        }
    }
    out
}

/// Fits one net per hospital on the first `train_weeks` of its history,
/// hospitals spread over workers like the other jobs.
pub fn train_all(
    plan: &JobPlan,
    histories: &BTreeMap<HospitalId, Vec<f64>>,
    train_weeks: usize,
    cfg: &crate::forecast::TrainConfig,
) -> BTreeMap<HospitalId, Result<(DualNet, crate::forecast::LossCurve), crate::forecast::ForecastError>> {
    let mut bundles: Vec<Vec<HospitalId>> = vec![Vec::new(); plan.n_workers()];
    for &id in histories.keys() {
        bundles[plan.worker_of(id)].push(id);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = bundles
            .into_iter()
            .map(|ids| {
                s.spawn(move || {
                    ids.into_iter()
                        .map(|id| (id, crate::forecast::fit(&histories[&id], train_weeks, cfg)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("training worker panicked"))
            .collect()
    })
}

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{horizon_breakdown, mean_var, relative_error, srcc, summarize, EvalError, MetricSummary, PredictionRecord};
use crate::census::{CensusConfig, ConfidenceModel, DensitySnapshot};
use crate::forecast::{issue_times, predict_schedule, DualNet, TrainConfig, HORIZON};
use crate::geogrid::{GridIndex, IndexOptions};
use crate::pipeline::{run_job1, train_all, CensusContext, JobPlan};
use crate::synth::{gen_logs, gen_world, SynthLogs, World, WorldConfig};
use crate::{HospitalId, HOUR, WEEK_HOURS};

/// Full description of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    /// Leading weeks used for training; the rest are the test period.
    pub train_weeks: usize,
    pub train: TrainConfig,
    pub census: CensusConfig,
    pub confidence_samples: usize,
    /// Seeds the confidence sampler.
    pub census_seed: u64,
    pub workers: usize,
    /// Hours whose truth is below this are left out of relative-error means.
    pub min_truth: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: WorldConfig::default(),
            train_weeks: 8,
            train: TrainConfig::default(),
            census: CensusConfig::default(),
            confidence_samples: 256,
            census_seed: 1,
            workers: 1,
            min_truth: 5.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.world.validate()?;
        self.train.validate()?;
        if self.train_weeks >= self.world.sim_weeks {
            return Err(ExperimentError::Config(format!(
                "train_weeks {} leaves no test period in {} weeks",
                self.train_weeks, self.world.sim_weeks
            )));
        }
        if self.workers == 0 {
            return Err(ExperimentError::Config("need at least one worker".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error(transparent)]
    Grid(#[from] crate::geogrid::GridError),
    #[error(transparent)]
    Census(#[from] crate::census::CensusError),
    #[error(transparent)]
    Forecast(#[from] crate::forecast::ForecastError),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Metric(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Hourly end-of-hour snapshots of every hospital over a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRun {
    pub snapshots: BTreeMap<HospitalId, Vec<DensitySnapshot>>,
    pub n_logs: usize,
    pub n_resolved: usize,
}

impl CensusRun {
    pub fn history(&self, id: HospitalId) -> Vec<f64> {
        self.snapshots[&id].iter().map(|s| s.n_total).collect()
    }

    pub fn histories(&self) -> BTreeMap<HospitalId, Vec<f64>> {
        self.snapshots.keys().map(|&id| (id, self.history(id))).collect()
    }
}

/// Runs the hourly census job over the first `hours` hours of the world.
pub fn run_census(
    world: &World,
    logs: &SynthLogs,
    census: CensusConfig,
    model: ConfidenceModel,
    seed: u64,
    plan: &JobPlan,
    hours: usize,
) -> Result<CensusRun, ExperimentError> {
    let index = GridIndex::build(&world.hospitals, world.cfg.grid, IndexOptions::default())?;
    let ctx = CensusContext::new(index, &world.hospitals, model, census, seed);
    let mut states = ctx.fresh_states(world.cfg.start_ts);
    let mut snapshots: BTreeMap<HospitalId, Vec<DensitySnapshot>> = ctx.hospital_ids().map(|id| (id, Vec::new())).collect();
    let (mut n_logs, mut n_resolved) = (0, 0);
    for h in 0..hours {
        let start = world.cfg.start_ts + h as i64 * HOUR;
        let out = run_job1(plan, &ctx, start, logs.window(start, start + HOUR), &mut states)?;
        n_logs += out.n_logs;
        n_resolved += out.n_resolved;
        for snap in out.snapshots {
            snapshots.get_mut(&snap.hospital_id).expect("one state per hospital").push(snap);
        }
    }
    Ok(CensusRun {
        snapshots,
        n_logs,
        n_resolved,
    })
}

/// Census estimate against synthetic truth over a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusAccuracy {
    /// Mean over hospitals of the SRCC between hourly estimate and truth.
    pub srcc_mean: f64,
    /// Mean relative error over hours with truth at or above `min_truth`.
    pub re_mean: f64,
    pub min_truth: f64,
    pub per_hospital: BTreeMap<HospitalId, (f64, f64)>,
}

pub fn census_accuracy(
    run: &CensusRun,
    truth: &crate::synth::GroundTruth,
    min_truth: f64,
) -> Result<CensusAccuracy, ExperimentError> {
    let mut srccs = Vec::new();
    let mut all_res = Vec::new();
    let mut per_hospital = BTreeMap::new();
    for (&id, snaps) in &run.snapshots {
        let estimate: Vec<f64> = snaps.iter().map(|s| s.n_total).collect();
        let actual: Vec<f64> = truth
            .series(id)
            .ok_or_else(|| ExperimentError::Config(format!("no truth for hospital {id}")))?
            .iter()
            .take(estimate.len())
            .map(|&c| f64::from(c))
            .collect();
        let s = srcc(&estimate, &actual)?;
        let res: Vec<f64> = estimate
            .iter()
            .zip(&actual)
            .filter(|(_, &g)| g >= min_truth)
            .map(|(&y, &g)| relative_error(y, g))
            .collect::<Result<_, _>>()?;
        srccs.push(s);
        per_hospital.insert(id, (s, mean_var(&res).0));
        all_res.extend(res);
    }
    Ok(CensusAccuracy {
        srcc_mean: mean_var(&srccs).0,
        re_mean: mean_var(&all_res).0,
        min_truth,
        per_hospital,
    })
}

/// Horizon stability figures of one breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub median_first: f64,
    pub median_last: f64,
    /// Share of all relative errors at or below 0.1.
    pub share_within_tenth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    pub best_epoch: usize,
    pub validation_loss: f64,
    /// Validation loss of the untrained, climatology-only net.
    pub climatology_loss: f64,
}

/// Everything written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub hospitals: usize,
    pub hours: usize,
    pub n_logs: usize,
    pub n_resolved: usize,
    pub min_truth: f64,
    /// Forecasts scored against census snapshots.
    pub vs_census: MetricSummary,
    /// Forecasts scored against synthetic truth.
    pub vs_truth: MetricSummary,
    pub horizon_vs_census: HorizonSummary,
    pub census_vs_truth: CensusAccuracy,
    pub training: BTreeMap<HospitalId, TrainingOutcome>,
    /// Hospitals that could not be trained, with the reason.
    pub untrained: BTreeMap<HospitalId, String>,
}

/// Generates the world, runs the census hourly, trains per-hospital nets on
/// the training weeks and forecasts every two hours over the test weeks.
/// Writes `summary.json`, `per_hospital.csv`, `horizon.csv` and
/// `curves/<id>.csv` under `out_dir` when one is given.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentSummary, ExperimentError> {
    cfg.validate()?;
    let plan = JobPlan::new(cfg.workers)?;
    let world = gen_world(&cfg.world)?;
    log::info!("world: {} hospitals, {} agents", world.hospitals.len(), world.agents.len());
    let logs = gen_logs(&world);
    let hours = cfg.world.total_hours();
    log::info!("{} logs over {hours} hours", logs.logs.len());
    let model = ConfidenceModel::new(cfg.confidence_samples)?;
    let census = run_census(&world, &logs, cfg.census, model, cfg.census_seed, &plan, hours)?;
    let census_vs_truth = census_accuracy(&census, &logs.truth, cfg.min_truth)?;
    log::info!(
        "census vs truth: srcc {:.3}, re {:.3}",
        census_vs_truth.srcc_mean,
        census_vs_truth.re_mean
    );

    let histories = census.histories();
    let mut training = BTreeMap::new();
    let mut untrained = BTreeMap::new();
    let mut models: BTreeMap<HospitalId, DualNet> = BTreeMap::new();
    for (id, result) in train_all(&plan, &histories, cfg.train_weeks, &cfg.train) {
        match result {
            Ok((net, curve)) => {
                training.insert(
                    id,
                    TrainingOutcome {
                        best_epoch: curve.best_epoch,
                        validation_loss: curve.validation.get(curve.best_epoch).copied().unwrap_or(f64::NAN),
                        climatology_loss: curve.validation.first().copied().unwrap_or(f64::NAN),
                    },
                );
                models.insert(id, net);
            }
            Err(e) => {
                log::warn!("hospital {id}: training failed: {e}");
                untrained.insert(id, e.to_string());
            }
        }
    }

    let test_start = cfg.train_weeks * WEEK_HOURS;
    let mut vs_census = Vec::new();
    let mut vs_truth = Vec::new();
    for (&id, net) in &models {
        let series = &histories[&id];
        let truth = logs.truth.series(id).expect("truth covers every hospital");
        for now in issue_times(test_start, hours + 1 - HORIZON) {
            let predicted = predict_schedule(net, series, now)?;
            let issued_ts = cfg.world.start_ts + now as i64 * HOUR;
            vs_census.push(PredictionRecord {
                hospital_id: id,
                issued_ts,
                predicted: predicted.clone(),
                truth: series[now..now + HORIZON].to_vec(),
            });
            vs_truth.push(PredictionRecord {
                hospital_id: id,
                issued_ts,
                predicted,
                truth: truth[now..now + HORIZON].iter().map(|&c| f64::from(c)).collect(),
            });
        }
    }
    let breakdown = horizon_breakdown(&vs_census, cfg.min_truth);
    let horizon_vs_census = HorizonSummary {
        median_first: breakdown.median(0).unwrap_or(f64::NAN),
        median_last: breakdown.median(HORIZON - 1).unwrap_or(f64::NAN),
        share_within_tenth: breakdown.share_at_most(0.1),
    };
    let summary = ExperimentSummary {
        hospitals: world.hospitals.len(),
        hours,
        n_logs: census.n_logs,
        n_resolved: census.n_resolved,
        min_truth: cfg.min_truth,
        vs_census: summarize(&vs_census, cfg.min_truth),
        vs_truth: summarize(&vs_truth, cfg.min_truth),
        horizon_vs_census,
        census_vs_truth,
        training,
        untrained,
    };

    if let Some(dir) = out_dir {
        let report = Report {
            cfg,
            summary: &summary,
            census: &census,
            truth: &logs.truth,
            vs_census: &vs_census,
            vs_truth: &vs_truth,
            breakdown: &breakdown,
        };
        report.write(dir)?;
    }
    Ok(summary)
}

struct Report<'a> {
    cfg: &'a ExperimentConfig,
    summary: &'a ExperimentSummary,
    census: &'a CensusRun,
    truth: &'a crate::synth::GroundTruth,
    vs_census: &'a [PredictionRecord],
    vs_truth: &'a [PredictionRecord],
    breakdown: &'a super::HorizonBreakdown,
}

#[derive(Serialize)]
struct HospitalRow {
    hospital_id: HospitalId,
    srcc_vs_census: f64,
    re_vs_census: f64,
    srcc_vs_truth: f64,
    re_vs_truth: f64,
    census_srcc_vs_truth: f64,
    census_re_vs_truth: f64,
    best_epoch: Option<usize>,
}

#[derive(Serialize)]
struct CurveRow {
    ts: i64,
    n_total: f64,
    n_over_2h: f64,
    n_over_4h: f64,
    n_over_6h: f64,
    truth: u32,
    /// Most recent forecast covering this hour, if any.
    predicted: Option<f64>,
}

impl Report<'_> {
    fn write(&self, dir: &Path) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(dir.join("curves"))?;
        std::fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(self.summary)?)?;
        self.per_hospital(&dir.join("per_hospital.csv"))?;
        self.horizon(&dir.join("horizon.csv"))?;
        for &id in self.census.snapshots.keys() {
            self.curve(id, &dir.join("curves").join(format!("{id}.csv")))?;
        }
        Ok(())
    }

    fn per_hospital(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(path)?;
        for &id in self.census.snapshots.keys() {
            let of = |records: &[PredictionRecord]| {
                let mine: Vec<PredictionRecord> = records.iter().filter(|r| r.hospital_id == id).cloned().collect();
                summarize(&mine, self.cfg.min_truth)
            };
            let (c, t) = (of(self.vs_census), of(self.vs_truth));
            let (census_srcc, census_re) = self.summary.census_vs_truth.per_hospital[&id];
            w.serialize(HospitalRow {
                hospital_id: id,
                srcc_vs_census: c.srcc_mean,
                re_vs_census: c.re_mean,
                srcc_vs_truth: t.srcc_mean,
                re_vs_truth: t.re_mean,
                census_srcc_vs_truth: census_srcc,
                census_re_vs_truth: census_re,
                best_epoch: self.summary.training.get(&id).map(|t| t.best_epoch),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per horizon hour: bucket shares, median and sample count.
    fn horizon(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let buckets: Vec<String> = (0..super::N_BUCKETS)
            .map(|b| {
                let lo = b as f64 * super::BUCKET_WIDTH;
                if b + 1 == super::N_BUCKETS {
                    format!("ge_{lo:.2}")
                } else {
                    format!("lt_{:.2}", lo + super::BUCKET_WIDTH)
                }
            })
            .collect();
        writeln!(f, "horizon_hour,{},median,n", buckets.join(","))?;
        for (h, shares) in self.breakdown.shares.iter().enumerate() {
            let cells: Vec<String> = shares.iter().map(|s| s.to_string()).collect();
            let median = self.breakdown.median(h).map_or(String::new(), |m| m.to_string());
            writeln!(f, "{},{},{},{}", h + 1, cells.join(","), median, self.breakdown.deltas[h].len())?;
        }
        f.flush()?;
        Ok(())
    }

    fn curve(&self, id: HospitalId, path: &Path) -> Result<(), ExperimentError> {
        let start_ts = self.cfg.world.start_ts;
        let mut latest: BTreeMap<i64, f64> = BTreeMap::new();
        // Records are in issue order, so later forecasts overwrite earlier ones.
        for r in self.vs_census.iter().filter(|r| r.hospital_id == id) {
            for (h, &v) in r.predicted.iter().enumerate() {
                latest.insert(r.issued_ts + (h as i64 + 1) * HOUR, v);
            }
        }
        let truth = self.truth.series(id).unwrap_or(&[]);
        let mut w = csv::Writer::from_path(path)?;
        for (k, s) in self.census.snapshots[&id].iter().enumerate() {
            debug_assert_eq!(s.ts, start_ts + (k as i64 + 1) * HOUR);
            w.serialize(CurveRow {
                ts: s.ts,
                n_total: s.n_total,
                n_over_2h: s.n_over_2h,
                n_over_4h: s.n_over_4h,
                n_over_6h: s.n_over_6h,
                truth: truth.get(k).copied().unwrap_or(0),
                predicted: latest.get(&s.ts).copied(),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Hourly runs against a state directory.
//!
//! ```text
//! <state>/pipeline.json            run configuration
//! <state>/catalog.json             hospital catalog
//! <state>/index.dsgi               grid index snapshot
//! <state>/runs/run-NNNNNN.json     manifest of hour NNNNNN
//! <state>/runs/run-NNNNNN/         census states (h<id>.dscl) and snapshots.csv
//! <state>/predictions/pred-<ts>.csv and pred-<ts>.json (skipped hospitals)
//! ```
//!
//! Run `k` covers `[start_ts + k h, start_ts + (k+1) h)` and starts from the
//! states written by run `k − 1`, so re-running a run id reproduces its
//! outputs exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{run_job1, run_job2, CensusContext, JobPlan, PipelineError};
use crate::census::{read_density_csv, write_density_csv, CensusConfig, ConfidenceModel, DensitySnapshot, HospitalState};
use crate::forecast::{write_predictions_csv, DualNet, ISSUE_EVERY_HOURS};
use crate::geogrid::{read_catalog, write_catalog, GridConfig, GridIndex, HospitalRecord, IndexOptions};
use crate::{HospitalId, LbsLog, HOUR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Start of run 0; should sit on a tick boundary.
    pub start_ts: i64,
    pub grid: GridConfig,
    pub census: CensusConfig,
    pub confidence_samples: usize,
    pub seed: u64,
    /// State files are kept for this many most recent runs.
    pub keep_state_runs: u64,
}

impl PipelineConfig {
    pub fn new(start_ts: i64, grid: GridConfig) -> Self {
        PipelineConfig {
            start_ts,
            grid,
            census: CensusConfig::default(),
            confidence_samples: crate::census::DEFAULT_SAMPLES,
            seed: 0x4D45_4443,
            keep_state_runs: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ownership {
    pub hospital_id: HospitalId,
    pub worker: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: u64,
    pub prev_run_id: Option<u64>,
    pub window_start: i64,
    pub window_end: i64,
    pub n_workers: usize,
    /// Relative to the state directory.
    pub state_files: BTreeMap<HospitalId, String>,
    pub snapshot_file: String,
    pub n_logs: usize,
    pub n_resolved: usize,
    pub elapsed_ms: u64,
    pub ownership: Vec<Ownership>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionManifest {
    pub issued_ts: i64,
    pub now_hour: usize,
    pub prediction_file: String,
    pub skipped: Vec<(HospitalId, String)>,
}

pub struct Runner {
    dir: PathBuf,
    config: PipelineConfig,
    hospitals: Vec<HospitalRecord>,
    ctx: CensusContext,
}

fn run_name(id: u64) -> String {
    format!("run-{id:06}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(value)?)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

impl Runner {
    /// Creates the state directory: config, catalog and grid index.
    pub fn init(dir: &Path, hospitals: &[HospitalRecord], config: PipelineConfig) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir.join("runs"))?;
        std::fs::create_dir_all(dir.join("predictions"))?;
        let index = GridIndex::build(hospitals, config.grid, IndexOptions::default())?;
        index.save(&dir.join("index.dsgi"))?;
        write_catalog(&dir.join("catalog.json"), hospitals)?;
        write_json(&dir.join("pipeline.json"), &config)?;
        Self::open(dir)
    }

    pub fn open(dir: &Path) -> Result<Self, PipelineError> {
        let config: PipelineConfig = read_json(&dir.join("pipeline.json"))?;
        let hospitals = read_catalog(&dir.join("catalog.json"))?;
        let index = GridIndex::load(&dir.join("index.dsgi"))?;
        let model = ConfidenceModel::new(config.confidence_samples)?;
        let ctx = CensusContext::new(index, &hospitals, model, config.census, config.seed);
        Ok(Runner {
            dir: dir.to_path_buf(),
            config,
            hospitals,
            ctx,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn hospitals(&self) -> &[HospitalRecord] {
        &self.hospitals
    }

    pub fn context(&self) -> &CensusContext {
        &self.ctx
    }

    fn manifest_path(&self, id: u64) -> PathBuf {
        self.dir.join("runs").join(format!("{}.json", run_name(id)))
    }

    /// Number of consecutive completed runs from run 0.
    pub fn completed_runs(&self) -> u64 {
        let mut n = 0;
        while self.manifest_path(n).exists() {
            n += 1;
        }
        n
    }

    pub fn manifest(&self, id: u64) -> Result<RunManifest, PipelineError> {
        read_json(&self.manifest_path(id))
            .map_err(|e| PipelineError::StateChainBroken(format!("manifest of run {id}: {e}")))
    }

    pub fn window_of(&self, id: u64) -> (i64, i64) {
        let start = self.config.start_ts + id as i64 * HOUR;
        (start, start + HOUR)
    }

    fn load_states(&self, run_id: u64) -> Result<BTreeMap<HospitalId, HospitalState>, PipelineError> {
        if run_id == 0 {
            return Ok(self.ctx.fresh_states(self.config.start_ts));
        }
        let prev = self.manifest(run_id - 1)?;
        let mut states = BTreeMap::new();
        for id in self.ctx.hospital_ids() {
            let rel = prev
                .state_files
                .get(&id)
                .ok_or_else(|| PipelineError::StateChainBroken(format!("run {} lacks hospital {id}", run_id - 1)))?;
            let state = HospitalState::load(&self.dir.join(rel))
                .map_err(|e| PipelineError::StateChainBroken(format!("{rel}: {e}")))?;
            states.insert(id, state);
        }
        Ok(states)
    }

    /// Runs hour `run_id` over `logs` (already restricted to its window) and
    /// persists states, snapshots and the manifest.
    pub fn run_hour(&self, run_id: u64, logs: &[LbsLog], plan: &JobPlan) -> Result<RunManifest, PipelineError> {
        let started = Instant::now();
        let (window_start, window_end) = self.window_of(run_id);
        let mut states = self.load_states(run_id)?;
        let out = run_job1(plan, &self.ctx, window_start, logs, &mut states)?;

        let rel_dir = format!("runs/{}", run_name(run_id));
        std::fs::create_dir_all(self.dir.join(&rel_dir))?;
        let mut state_files = BTreeMap::new();
        for (id, state) in &states {
            let rel = format!("{rel_dir}/h{id}.dscl");
            state.save(&self.dir.join(&rel))?;
            state_files.insert(*id, rel);
        }
        let snapshot_file = format!("{rel_dir}/snapshots.csv");
        write_density_csv(&self.dir.join(&snapshot_file), &out.snapshots)?;

        let manifest = RunManifest {
            run_id,
            prev_run_id: run_id.checked_sub(1),
            window_start,
            window_end,
            n_workers: plan.n_workers(),
            state_files,
            snapshot_file,
            n_logs: out.n_logs,
            n_resolved: out.n_resolved,
            elapsed_ms: started.elapsed().as_millis() as u64,
            ownership: out
                .ownership
                .iter()
                .map(|&(hospital_id, worker)| Ownership { hospital_id, worker })
                .collect(),
        };
        write_json(&self.manifest_path(run_id), &manifest)?;
        self.prune(run_id)?;
        Ok(manifest)
    }

    fn prune(&self, latest: u64) -> Result<(), PipelineError> {
        let Some(cutoff) = latest.checked_sub(self.config.keep_state_runs) else {
            return Ok(());
        };
        let dir = self.dir.join("runs").join(run_name(cutoff));
        if let Ok(entries) = std::fs::read_dir(&dir) {
            for entry in entries.flatten() {
                if entry.path().extension().is_some_and(|e| e == "dscl") {
                    std::fs::remove_file(entry.path())?;
                }
            }
        }
        Ok(())
    }

    /// Runs `hours` consecutive hours after the last completed run, taking
    /// each window's logs from `logs` (any order).
    pub fn run_hours(&self, logs: &[LbsLog], hours: u64, plan: &JobPlan) -> Result<Vec<RunManifest>, PipelineError> {
        let mut sorted = logs.to_vec();
        sorted.sort_by_key(LbsLog::sort_key);
        let first = self.completed_runs();
        (first..first + hours)
            .map(|id| {
                let (a, b) = self.window_of(id);
                let lo = sorted.partition_point(|l| l.ts < a);
                let hi = sorted.partition_point(|l| l.ts < b);
                self.run_hour(id, &sorted[lo..hi], plan)
            })
            .collect()
    }

    /// End-of-hour snapshots of every hospital, in run order.
    pub fn snapshots(&self) -> Result<BTreeMap<HospitalId, Vec<DensitySnapshot>>, PipelineError> {
        self.snapshots_in(0..self.completed_runs())
    }

    /// Snapshots of the runs in `runs`, which must all be complete.
    pub fn snapshots_in(&self, runs: std::ops::Range<u64>) -> Result<BTreeMap<HospitalId, Vec<DensitySnapshot>>, PipelineError> {
        let mut out: BTreeMap<HospitalId, Vec<DensitySnapshot>> =
            self.ctx.hospital_ids().map(|id| (id, Vec::new())).collect();
        for run in runs {
            let m = self.manifest(run)?;
            for snap in read_density_csv(&self.dir.join(&m.snapshot_file))? {
                out.entry(snap.hospital_id).or_default().push(snap);
            }
        }
        Ok(out)
    }

    /// Hourly `n_total` series per hospital.
    pub fn histories(&self) -> Result<BTreeMap<HospitalId, Vec<f64>>, PipelineError> {
        Ok(self
            .snapshots()?
            .into_iter()
            .map(|(id, snaps)| (id, snaps.iter().map(|s| s.n_total).collect()))
            .collect())
    }

    /// Loads `<models>/h<id>.dsnn` for every hospital that has one.
    pub fn load_models(&self, models_dir: &Path) -> Result<BTreeMap<HospitalId, DualNet>, PipelineError> {
        let mut models = BTreeMap::new();
        for id in self.ctx.hospital_ids() {
            let path = models_dir.join(format!("h{id}.dsnn"));
            if path.exists() {
                models.insert(id, DualNet::load(&path)?);
            }
        }
        Ok(models)
    }

    /// Forecasts the 24 hours after the last completed run and writes the
    /// prediction file.
    pub fn predict(&self, models_dir: &Path, plan: &JobPlan) -> Result<PredictionManifest, PipelineError> {
        let now = self.completed_runs() as usize;
        let issued_ts = self.config.start_ts + now as i64 * HOUR;
        let out = run_job2(plan, &self.histories()?, &self.load_models(models_dir)?, now, issued_ts);
        let prediction_file = format!("predictions/pred-{issued_ts}.csv");
        write_predictions_csv(&self.dir.join(&prediction_file), &out.rows)?;
        let manifest = PredictionManifest {
            issued_ts,
            now_hour: now,
            prediction_file,
            skipped: out.skipped,
        };
        write_json(&self.dir.join(format!("predictions/pred-{issued_ts}.json")), &manifest)?;
        Ok(manifest)
    }

    /// Whether the hour after the last completed run is on the issue grid.
    pub fn prediction_due(&self) -> bool {
        (self.completed_runs() as usize) % ISSUE_EVERY_HOURS == 0
    }

    /// The most recent prediction manifest, if any.
    pub fn latest_prediction(&self) -> Result<Option<PredictionManifest>, PipelineError> {
        let mut latest: Option<(i64, PathBuf)> = None;
        for entry in std::fs::read_dir(self.dir.join("predictions"))?.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(ts) = name
                .strip_prefix("pred-")
                .and_then(|s| s.strip_suffix(".json"))
                .and_then(|s| s.parse::<i64>().ok())
            else {
                continue;
            };
            if latest.as_ref().is_none_or(|(best, _)| ts > *best) {
                latest = Some((ts, entry.path()));
            }
        }
        latest.map(|(_, p)| read_json(&p)).transpose()
    }
}

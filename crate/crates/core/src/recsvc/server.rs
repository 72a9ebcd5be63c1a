use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use super::rank::{CrowdConfig, CrowdLevel, LatLng, RankedEntry, Ranker, Weights};
use super::RecError;
use crate::census::DensitySnapshot;
use crate::forecast::read_predictions_csv;
use crate::geogrid::HospitalRecord;
use crate::pipeline::{JobPlan, Runner};
use crate::synth::read_logs;
use crate::{HospitalId, LbsLog, HOUR};

/// Everything `serve` needs to come up.
#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub state_dir: PathBuf,
    /// Models used for predictions issued by simulation steps.
    pub models_dir: Option<PathBuf>,
    /// Logs replayed by simulation steps; without them steps only decay.
    pub sim_logs: Option<PathBuf>,
    pub workers: usize,
    pub crowd: CrowdConfig,
}

/// Shared, read-mostly service state.
#[derive(Clone)]
pub struct AppState {
    runner: Arc<Runner>,
    ranker: Ranker,
    models_dir: Option<PathBuf>,
    plan: JobPlan,
    /// Sorted by time tag.
    sim_logs: Arc<Vec<LbsLog>>,
    /// Held for the whole of a simulation step.
    pub(super) advancing: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(runner: Runner, crowd: CrowdConfig, plan: JobPlan) -> Result<Self, RecError> {
        crowd.validate()?;
        let ranker = Ranker::new(runner.config().grid, crowd);
        Ok(AppState {
            runner: Arc::new(runner),
            ranker,
            models_dir: None,
            plan,
            sim_logs: Arc::new(Vec::new()),
            advancing: Arc::new(Mutex::new(())),
        })
    }

    pub fn with_models(mut self, dir: &Path) -> Self {
        self.models_dir = Some(dir.to_path_buf());
        self
    }

    pub fn with_sim_logs(mut self, mut logs: Vec<LbsLog>) -> Self {
        logs.sort_by_key(LbsLog::sort_key);
        self.sim_logs = Arc::new(logs);
        self
    }

    pub fn runner(&self) -> &Runner {
        &self.runner
    }

    fn hospital(&self, id: HospitalId) -> Result<&HospitalRecord, ApiError> {
        self.runner
            .hospitals()
            .iter()
            .find(|h| h.hospital_id == id)
            .ok_or_else(|| ApiError::not_found(format!("no hospital {id}")))
    }

    fn latest_snapshots(&self) -> Result<BTreeMap<HospitalId, DensitySnapshot>, RecError> {
        let n = self.runner.completed_runs();
        if n == 0 {
            return Ok(BTreeMap::new());
        }
        Ok(self
            .runner
            .snapshots_in(n - 1..n)?
            .into_iter()
            .filter_map(|(id, mut snaps)| snaps.pop().map(|s| (id, s)))
            .collect())
    }

    /// Runs the next hour and, when one is due and models exist, a forecast.
    fn advance(&self) -> Result<Advanced, RecError> {
        let run_id = self.runner.completed_runs();
        let (start, end) = self.runner.window_of(run_id);
        let lo = self.sim_logs.partition_point(|l| l.ts < start);
        let hi = self.sim_logs.partition_point(|l| l.ts < end);
        self.runner.run_hour(run_id, &self.sim_logs[lo..hi], &self.plan)?;
        if let Some(models) = &self.models_dir {
            if self.runner.prediction_due() {
                self.runner.predict(models, &self.plan)?;
            }
        }
        Ok(Advanced { run_id, ts: end })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Advanced {
    pub run_id: u64,
    /// End of the hour just processed.
    pub ts: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HospitalDetail {
    #[serde(flatten)]
    pub record: HospitalRecord,
    pub crowd: CrowdLevel,
    /// Time of the snapshot behind `crowd`, absent before the first run.
    pub snapshot_ts: Option<i64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ObservedPoint {
    pub ts: i64,
    pub n_total: f64,
    pub n2h: f64,
    pub n4h: f64,
    pub n6h: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PredictedPoint {
    pub ts: i64,
    pub value: f64,
    pub predicted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensityCurve {
    pub observed: Vec<ObservedPoint>,
    pub predicted: Vec<PredictedPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// An error already mapped to its HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: message.into(),
        }
    }
}

impl From<RecError> for ApiError {
    fn from(e: RecError) -> Self {
        match e {
            RecError::InvalidWeights(_) | RecError::InvalidLocation => ApiError::bad_request(e.to_string()),
            RecError::NoHospitals => ApiError::not_found(e.to_string()),
            e => {
                log::error!("request failed: {e}");
                ApiError {
                    status: StatusCode::INTERNAL_SERVER_ERROR,
                    code: "internal",
                    message: e.to_string(),
                }
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

/// Runs blocking file work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        code: "internal",
        message: e.to_string(),
    })?
}

#[derive(Debug, Deserialize)]
struct RankQuery {
    lat: Option<f64>,
    lng: Option<f64>,
    w_dist: Option<f64>,
    w_crowd: Option<f64>,
    w_class: Option<f64>,
}

async fn list_hospitals(
    State(state): State<AppState>,
    query: Result<Query<RankQuery>, QueryRejection>,
) -> Result<Json<Vec<RankedEntry>>, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let (Some(lat), Some(lng)) = (q.lat, q.lng) else {
        return Err(ApiError::bad_request("lat and lng are required"));
    };
    let user = LatLng::new(lat, lng);
    if !user.is_valid() {
        return Err(RecError::InvalidLocation.into());
    }
    let d = Weights::default();
    let weights = Weights::new(
        q.w_dist.unwrap_or(d.distance),
        q.w_crowd.unwrap_or(d.crowd),
        q.w_class.unwrap_or(d.class),
    )?;
    blocking(move || {
        let snapshots = state.latest_snapshots()?;
        Ok(Json(state.ranker.rank(user, state.runner.hospitals(), &snapshots, &weights)?))
    })
    .await
}

fn parse_id(id: Result<UrlPath<u32>, PathRejection>) -> Result<HospitalId, ApiError> {
    id.map(|UrlPath(id)| HospitalId(id))
        .map_err(|e| ApiError::not_found(e.body_text()))
}

async fn hospital_detail(
    State(state): State<AppState>,
    id: Result<UrlPath<u32>, PathRejection>,
) -> Result<Json<HospitalDetail>, ApiError> {
    let id = parse_id(id)?;
    state.hospital(id)?;
    blocking(move || {
        let record = state.hospital(id)?.clone();
        let snapshots = state.latest_snapshots()?;
        let snapshot = snapshots.get(&id);
        Ok(Json(HospitalDetail {
            crowd: state.ranker.crowd_of(&record, snapshot),
            snapshot_ts: snapshot.map(|s| s.ts),
            record,
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct SpanQuery {
    span: Option<String>,
}

async fn hospital_density(
    State(state): State<AppState>,
    id: Result<UrlPath<u32>, PathRejection>,
    query: Result<Query<SpanQuery>, QueryRejection>,
) -> Result<Json<DensityCurve>, ApiError> {
    let id = parse_id(id)?;
    state.hospital(id)?;
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let hours: u64 = match q.span.as_deref().unwrap_or("day") {
        "day" => 24,
        "week" => 168,
        other => return Err(ApiError::bad_request(format!("span must be day or week, not {other}"))),
    };
    blocking(move || {
        let n = state.runner.completed_runs();
        let observed = state
            .runner
            .snapshots_in(n.saturating_sub(hours)..n)
            .map_err(RecError::from)?
            .remove(&id)
            .unwrap_or_default()
            .into_iter()
            .map(|s| ObservedPoint {
                ts: s.ts,
                n_total: s.n_total,
                n2h: s.n_over_2h,
                n4h: s.n_over_4h,
                n6h: s.n_over_6h,
            })
            .collect();
        let mut predicted = Vec::new();
        if let Some(m) = state.runner.latest_prediction().map_err(RecError::from)? {
            let rows = read_predictions_csv(&state.runner.dir().join(&m.prediction_file))
                .map_err(|e| RecError::Pipeline(e.into()))?;
            predicted = rows
                .into_iter()
                .filter(|r| r.hospital_id == id)
                .map(|r| PredictedPoint {
                    // Horizon h covers the hour ending h hours after issue.
                    ts: r.issued_ts + i64::from(r.horizon_hour) * HOUR,
                    value: r.value,
                    predicted: true,
                })
                .collect();
        }
        Ok(Json(DensityCurve { observed, predicted }))
    })
    .await
}

async fn sim_advance(State(state): State<AppState>) -> Result<Json<Advanced>, ApiError> {
    let Ok(guard) = state.advancing.clone().try_lock_owned() else {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            code: "conflict",
            message: "a pipeline run is already in flight".into(),
        });
    };
    blocking(move || {
        let out = state.advance();
        drop(guard);
        Ok(Json(out?))
    })
    .await
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/hospitals", get(list_hospitals))
        .route("/api/hospitals/{id}", get(hospital_detail))
        .route("/api/hospitals/{id}/density", get(hospital_density))
        .route("/api/sim/advance", post(sim_advance))
        .fallback(fallback)
        .with_state(state)
}

/// Opens the state directory, then serves until the task is cancelled.
pub async fn serve(cfg: ServeConfig) -> Result<(), RecError> {
    let runner = Runner::open(&cfg.state_dir)?;
    let plan = JobPlan::new(cfg.workers)?;
    let mut state = AppState::new(runner, cfg.crowd, plan)?;
    if let Some(models) = &cfg.models_dir {
        state = state.with_models(models);
    }
    if let Some(path) = &cfg.sim_logs {
        state = state.with_sim_logs(read_logs(path)?);
    }
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    log::info!("serving {} on {}", cfg.state_dir.display(), listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

//! Per-hospital 24-hour density forecasts.
//!
//! Weekly periodicity drives the design. A short encoder reads the trailing
//! 4 hours, a long encoder the trailing 12 hours, and the fusion layer mixes
//! both with the climatology of the target day, the mean over up to 13 prior
//! weeks at the same hours of the week. Hour indices below are offsets into an
//! hourly series whose hour 0 starts a week.

mod lstm;
mod net;
mod store;

pub use lstm::LstmCell;
pub use net::{train, DualNet, LossCurve, TrainConfig, HIDDEN};
pub use store::{read_predictions_csv, write_predictions_csv, PredictionRow, MODEL_MAGIC, MODEL_VERSION};

use serde::{Deserialize, Serialize};

use crate::WEEK_HOURS;

pub const SHORT_WINDOW: usize = 4;
pub const LONG_WINDOW: usize = 12;
pub const HORIZON: usize = 24;
/// Roughly three months.
pub const CLIMATOLOGY_WEEKS: usize = 13;
pub const MIN_HISTORY_WEEKS: usize = 3;
pub const ISSUE_EVERY_HOURS: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("series of {0} hours is shorter than one week")]
    ShortSeries(usize),
    #[error("slice step {step} must be positive, at most the window {window} and divide 168")]
    BadSlice { window: usize, step: usize },
    #[error("input shapes do not match the network")]
    ShapeMismatch,
    #[error("need {needed_weeks} prior weeks of history, have {available_weeks}")]
    InsufficientHistory { needed_weeks: usize, available_weeks: usize },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("not a model file")]
    BadMagic,
    #[error("model version {found}, expected {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("corrupt model file: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Sliding windows of `window` hours advanced by `step` hours over the week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    window: usize,
    step: usize,
}

impl SliceSpec {
    pub fn new(window: usize, step: usize) -> Result<Self, ForecastError> {
        if step == 0 || step > window || WEEK_HOURS % step != 0 {
            return Err(ForecastError::BadSlice { window, step });
        }
        Ok(SliceSpec { window, step })
    }

    pub fn short() -> Self {
        SliceSpec { window: 4, step: 2 }
    }

    pub fn long() -> Self {
        SliceSpec { window: 12, step: 6 }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Periods per week.
    pub fn periods_per_week(&self) -> usize {
        WEEK_HOURS / self.step
    }
}

/// Week number and period index within the week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub week: usize,
    pub index: usize,
}

/// Tiles every whole week of `series` with windows starting at multiples of
/// the step. Windows running past the end of the week wrap to its start.
pub fn slice_periods(series: &[f64], spec: SliceSpec) -> Result<Vec<(Period, Vec<f64>)>, ForecastError> {
    let weeks = series.len() / WEEK_HOURS;
    if weeks == 0 {
        return Err(ForecastError::ShortSeries(series.len()));
    }
    let mut out = Vec::with_capacity(weeks * spec.periods_per_week());
    for week in 0..weeks {
        let base = week * WEEK_HOURS;
        for index in 0..spec.periods_per_week() {
            let start = index * spec.step;
            let values = (0..spec.window)
                .map(|k| series[base + (start + k) % WEEK_HOURS])
                .collect();
            out.push((Period { week, index }, values));
        }
    }
    Ok(out)
}

/// Inputs of one forecast issued at hour `t`, plus the 24 values that follow
/// when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub short: Vec<f64>,
    pub long: Vec<f64>,
    pub climatology: Vec<f64>,
    /// Empty when the target hours are not yet observed.
    pub target: Vec<f64>,
}

/// Mean over the prior `min(13, t/168)` weeks of hours `t..t+24` shifted back
/// by whole weeks. Needs at least `min_weeks` prior weeks.
pub fn climatology(series: &[f64], t: usize, min_weeks: usize) -> Result<Vec<f64>, ForecastError> {
    let available = t / WEEK_HOURS;
    if available < min_weeks.max(1) {
        return Err(ForecastError::InsufficientHistory {
            needed_weeks: min_weeks.max(1),
            available_weeks: available,
        });
    }
    let weeks = available.min(CLIMATOLOGY_WEEKS);
    Ok((0..HORIZON)
        .map(|j| (1..=weeks).map(|k| series[t + j - k * WEEK_HOURS]).sum::<f64>() / weeks as f64)
        .collect())
}

/// Builds the example for issue hour `t` from data strictly before `t`.
pub fn example_at(series: &[f64], t: usize, min_weeks: usize) -> Result<TrainingExample, ForecastError> {
    if t < LONG_WINDOW || t > series.len() {
        return Err(ForecastError::InsufficientHistory {
            needed_weeks: min_weeks,
            available_weeks: t / WEEK_HOURS,
        });
    }
    let climatology = climatology(series, t, min_weeks)?;
    let target = if t + HORIZON <= series.len() {
        series[t..t + HORIZON].to_vec()
    } else {
        Vec::new()
    };
    Ok(TrainingExample {
        short: series[t - SHORT_WINDOW..t].to_vec(),
        long: series[t - LONG_WINDOW..t].to_vec(),
        climatology,
        target,
    })
}

/// Hourly training and validation examples from the first `train_weeks`.
/// The last `validation_weeks` are held out; no target of one set reaches
/// into the other.
pub fn training_sets(
    series: &[f64],
    train_weeks: usize,
    validation_weeks: usize,
) -> Result<(Vec<TrainingExample>, Vec<TrainingExample>), ForecastError> {
    let end = (train_weeks * WEEK_HOURS).min(series.len());
    let split = end.saturating_sub(validation_weeks * WEEK_HOURS);
    let first = MIN_HISTORY_WEEKS * WEEK_HOURS;
    let collect = |from: usize, to: usize| -> Result<Vec<TrainingExample>, ForecastError> {
        (from..(to + 1).saturating_sub(HORIZON))
            .map(|t| example_at(&series[..to], t, MIN_HISTORY_WEEKS))
            .collect()
    };
    let train = collect(first, split)?;
    let validation = if validation_weeks > 0 { collect(split.max(first), end)? } else { Vec::new() };
    if train.is_empty() {
        return Err(ForecastError::InsufficientHistory {
            needed_weeks: MIN_HISTORY_WEEKS + validation_weeks + 1,
            available_weeks: series.len() / WEEK_HOURS,
        });
    }
    Ok((train, validation))
}

/// 95th percentile of the values, or 1 if that is not positive.
pub fn normalization_scale(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = sorted[((sorted.len() - 1) as f64 * 0.95).round() as usize];
    if q > 0.0 {
        q
    } else {
        1.0
    }
}

/// Trains one hospital's net on the first `train_weeks` of its series.
pub fn fit(series: &[f64], train_weeks: usize, cfg: &TrainConfig) -> Result<(DualNet, LossCurve), ForecastError> {
    let (train_set, validation) = training_sets(series, train_weeks, cfg.validation_weeks)?;
    let end = (train_weeks * WEEK_HOURS).min(series.len());
    let net = DualNet::new(normalization_scale(&series[..end]), cfg.seed);
    train(&net, &train_set, &validation, cfg)
}

/// Prediction for hours `now..now+24` using only `series[..now]`.
pub fn predict_schedule(net: &DualNet, series: &[f64], now: usize) -> Result<Vec<f64>, ForecastError> {
    let history = &series[..now.min(series.len())];
    let mut ex = example_at(history, now, MIN_HISTORY_WEEKS)?;
    ex.target.clear();
    net.forward(&ex)
}

/// Issue hours in `[from, to)` on the two-hour grid.
pub fn issue_times(from: usize, to: usize) -> impl Iterator<Item = usize> {
    let first = from.div_ceil(ISSUE_EVERY_HOURS) * ISSUE_EVERY_HOURS;
    (first..to).step_by(ISSUE_EVERY_HOURS)
}

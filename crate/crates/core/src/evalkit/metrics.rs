use serde::{Deserialize, Serialize};

use super::EvalError;

/// Number of relative-error buckets: 16 of width 0.05 and one overflow.
pub const N_BUCKETS: usize = 17;
pub const BUCKET_WIDTH: f64 = 0.05;

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn srcc(y: &[f64], g: &[f64]) -> Result<f64, EvalError> {
    if y.len() != g.len() {
        return Err(EvalError::LengthMismatch(y.len(), g.len()));
    }
    if y.len() < 2 {
        return Err(EvalError::DegenerateInput);
    }
    pearson(&average_ranks(y), &average_ranks(g)).ok_or(EvalError::DegenerateInput)
}

/// `|y − g| / g`.
pub fn relative_error(y: f64, g: f64) -> Result<f64, EvalError> {
    if !(g > 0.0) {
        return Err(EvalError::ZeroTruth);
    }
    Ok((y - g).abs() / g)
}

/// Bucket index of a relative error: `[0.05·k, 0.05·(k+1))` for k < 16,
/// everything from 0.8 up in bucket 16.
pub fn bucket_of(delta: f64) -> usize {
    // Compare against exact bucket edges so 0.1 lands in bucket 2.
    (1..N_BUCKETS)
        .find(|&k| delta < k as f64 * BUCKET_WIDTH)
        .map_or(N_BUCKETS - 1, |k| k - 1)
}

/// One issued forecast and the values that materialised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub hospital_id: crate::HospitalId,
    pub issued_ts: i64,
    pub predicted: Vec<f64>,
    pub truth: Vec<f64>,
}

/// Share of relative errors per bucket at each horizon hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonBreakdown {
    /// `shares[h][b]`: fraction of defined errors at horizon `h + 1` in bucket `b`.
    pub shares: Vec<[f64; N_BUCKETS]>,
    /// All defined errors per horizon hour, ascending.
    pub deltas: Vec<Vec<f64>>,
    /// Pairs skipped because the truth was below the floor.
    pub skipped: usize,
}

impl HorizonBreakdown {
    pub fn median(&self, h: usize) -> Option<f64> {
        median(&self.deltas[h])
    }

    /// Fraction of all defined errors at or below `threshold`.
    pub fn share_at_most(&self, threshold: f64) -> f64 {
        let all: usize = self.deltas.iter().map(Vec::len).sum();
        if all == 0 {
            return 0.0;
        }
        let hits: usize = self
            .deltas
            .iter()
            .map(|d| d.partition_point(|&x| x <= threshold))
            .sum();
        hits as f64 / all as f64
    }
}

pub fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Relative errors grouped by horizon hour. Truth values below `min_truth`
/// (and zeros in any case) leave the error undefined and are skipped.
pub fn horizon_breakdown(records: &[PredictionRecord], min_truth: f64) -> HorizonBreakdown {
    let horizon = records.iter().map(|r| r.predicted.len()).max().unwrap_or(0);
    let mut deltas = vec![Vec::new(); horizon];
    let mut skipped = 0;
    for r in records {
        for (h, (&y, &g)) in r.predicted.iter().zip(&r.truth).enumerate() {
            match relative_error(y, g) {
                Ok(d) if g >= min_truth => deltas[h].push(d),
                _ => skipped += 1,
            }
        }
    }
    let shares = deltas
        .iter_mut()
        .map(|d| {
            d.sort_by(f64::total_cmp);
            let mut row = [0.0; N_BUCKETS];
            for &x in d.iter() {
                row[bucket_of(x)] += 1.0;
            }
            if !d.is_empty() {
                row.iter_mut().for_each(|v| *v /= d.len() as f64);
            }
            row
        })
        .collect();
    HorizonBreakdown { shares, deltas, skipped }
}

/// Means and sample variances of per-prediction SRCC and per-hour relative
/// error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub srcc_mean: f64,
    pub srcc_var: f64,
    pub re_mean: f64,
    pub re_var: f64,
    pub n_predictions: usize,
    pub n_hospitals: usize,
    /// Predictions whose SRCC was undefined (constant vector).
    pub srcc_undefined: usize,
    /// Hourly pairs whose relative error was undefined or below the truth floor.
    pub re_undefined: usize,
}

/// Mean and sample variance (n − 1 denominator; 0 for fewer than two values).
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    (mean, var)
}

pub fn summarize(records: &[PredictionRecord], min_truth: f64) -> MetricSummary {
    let mut srccs = Vec::new();
    let mut srcc_undefined = 0;
    let mut res = Vec::new();
    let mut re_undefined = 0;
    for r in records {
        match srcc(&r.predicted, &r.truth) {
            Ok(s) => srccs.push(s),
            Err(_) => srcc_undefined += 1,
        }
        for (&y, &g) in r.predicted.iter().zip(&r.truth) {
            match relative_error(y, g) {
                Ok(d) if g >= min_truth => res.push(d),
                _ => re_undefined += 1,
            }
        }
    }
    let (srcc_mean, srcc_var) = mean_var(&srccs);
    let (re_mean, re_var) = mean_var(&res);
    let mut hospitals: Vec<_> = records.iter().map(|r| r.hospital_id).collect();
    hospitals.sort_unstable();
    hospitals.dedup();
    MetricSummary {
        srcc_mean,
        srcc_var,
        re_mean,
        re_var,
        n_predictions: records.len(),
        n_hospitals: hospitals.len(),
        srcc_undefined,
        re_undefined,
    }
}

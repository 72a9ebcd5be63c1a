//! Trains the dual-window forecaster on a noisy weekly series and compares
//! its next-day forecast with the climatology it starts from.
//!
//! cargo run --example forecast_train

use medcrowd::evalkit::{relative_error, srcc};
use medcrowd::forecast::{climatology, fit, predict_schedule, TrainConfig, HORIZON, MIN_HISTORY_WEEKS};
use medcrowd::WEEK_HOURS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Weekday clinic hours with a lunch dip, growing slowly, plus noise.
    let series: Vec<f64> = (0..8 * WEEK_HOURS)
        .map(|t| {
            let (day, hour) = ((t % WEEK_HOURS) / 24, t % 24);
            let open = day < 5 && (8..18).contains(&hour);
            let base = if open { if hour == 12 { 25.0 } else { 40.0 } } else { 2.0 };
            base * (1.0 + t as f64 / 5000.0) + rng.random_range(-2.0..2.0f64)
        })
        .map(|v| v.max(0.0))
        .collect();

    let cfg = TrainConfig {
        epochs: 10,
        ..TrainConfig::default()
    };
    let (net, curve) = fit(&series, 7, &cfg)?;
    println!("validation loss by epoch: {:.4?}", curve.validation);
    println!("best epoch {}", curve.best_epoch);

    let now = 7 * WEEK_HOURS + 6;
    let forecast = predict_schedule(&net, &series, now)?;
    let baseline = climatology(&series[..now], now, MIN_HISTORY_WEEKS)?;
    let truth = &series[now..now + HORIZON];
    let mean_re = |y: &[f64]| {
        let v: Vec<f64> = y.iter().zip(truth).filter(|(_, g)| **g >= 5.0).filter_map(|(a, g)| relative_error(*a, *g).ok()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!("net:         srcc {:.3}, re {:.3}", srcc(&forecast, truth)?, mean_re(&forecast));
    println!("climatology: srcc {:.3}, re {:.3}", srcc(&baseline, truth)?, mean_re(&baseline));
    Ok(())
}

//! Runs a reduced end-to-end experiment (census, training, forecasting and
//! scoring) and prints the summary. `medcrowd eval run` runs the full one.
//!
//! cargo run --example experiment -- [out_dir]

use std::path::PathBuf;

use medcrowd::evalkit::{run_experiment, ExperimentConfig};
use medcrowd::synth::WorldConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let mut cfg = ExperimentConfig {
        world: WorldConfig {
            n_hospitals: 4,
            sim_weeks: 7,
            ..WorldConfig::default()
        },
        train_weeks: 6,
        ..ExperimentConfig::default()
    };
    cfg.train.epochs = 8;
    let s = run_experiment(&cfg, out.as_deref())?;
    println!("{} hospitals, {} hours, {} of {} logs resolved", s.hospitals, s.hours, s.n_resolved, s.n_logs);
    println!(
        "census vs truth:   srcc {:.3}  re {:.3}",
        s.census_vs_truth.srcc_mean, s.census_vs_truth.re_mean
    );
    println!("forecast vs census: srcc {:.3}  re {:.3}", s.vs_census.srcc_mean, s.vs_census.re_mean);
    println!("forecast vs truth:  srcc {:.3}  re {:.3}", s.vs_truth.srcc_mean, s.vs_truth.re_mean);
    println!(
        "horizon: median delta {:.3} at +1h, {:.3} at +24h; {:.0}% within 0.1",
        s.horizon_vs_census.median_first,
        s.horizon_vs_census.median_last,
        100.0 * s.horizon_vs_census.share_within_tenth
    );
    if let Some(dir) = out {
        println!("reports in {}", dir.display());
    }
    Ok(())
}

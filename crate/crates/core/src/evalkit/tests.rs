use super::*;
use crate::synth::{AgentMix, WorldConfig};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        world: WorldConfig {
            n_hospitals: 3,
            sim_weeks: 6,
            agent_mix: AgentMix {
                outpatient: 150.0,
                passerby: 60.0,
                inpatient: 1.0,
                staff: 3.0,
                neighbor: 1.0,
            },
            ..WorldConfig::default()
        },
        train_weeks: 5,
        workers: 2,
        ..ExperimentConfig::default()
    };
    cfg.train.epochs = 2;
    cfg
}

#[test]
fn experiment_writes_reports_deterministically() {
    let cfg = small();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let summary = run_experiment(&cfg, Some(a.path())).unwrap();
    let mut other = cfg.clone();
    other.workers = 1;
    run_experiment(&other, Some(b.path())).unwrap();
    for name in ["summary.json", "per_hospital.csv", "horizon.csv", "curves/1.csv"] {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert_eq!(x, y, "{name}");
    }

    assert_eq!(summary.hospitals, 3);
    assert_eq!(summary.hours, 6 * 168);
    assert!(summary.untrained.is_empty());
    // One week of test hours, issues every two hours, whole horizons only.
    assert_eq!(summary.vs_census.n_predictions, 3 * (168 - 24 + 2) / 2);
    assert!(summary.census_vs_truth.srcc_mean > 0.5);

    let horizon = std::fs::read_to_string(a.path().join("horizon.csv")).unwrap();
    let lines: Vec<&str> = horizon.lines().collect();
    assert_eq!(lines.len(), 25);
    assert_eq!(lines[0].split(',').count(), 1 + N_BUCKETS + 2);
    let curve = std::fs::read_to_string(a.path().join("curves/2.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 6 * 168);
}

#[test]
fn config_rejects_empty_test_period_and_accepts_partial_json() {
    let mut cfg = small();
    cfg.train_weeks = cfg.world.sim_weeks;
    assert!(matches!(cfg.validate(), Err(ExperimentError::Config(_))));
    let parsed: ExperimentConfig = serde_json::from_str(r#"{"world": {"n_hospitals": 5}, "train": {"epochs": 3}}"#).unwrap();
    assert_eq!(parsed.world.n_hospitals, 5);
    assert_eq!(parsed.world.sim_weeks, 10);
    assert_eq!(parsed.train.epochs, 3);
    assert_eq!(parsed.train_weeks, 8);
}

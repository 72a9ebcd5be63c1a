use std::collections::BTreeMap;

use super::*;
use crate::census::{ConfidenceModel, CensusConfig};
use crate::forecast::DualNet;
use crate::geogrid::{GridIndex, IndexOptions};
use crate::synth::{gen_logs, gen_world, AgentMix, SynthLogs, World, WorldConfig};
use crate::{HospitalId, HOUR, WEEK_HOURS};

fn world() -> (World, SynthLogs) {
    let cfg = WorldConfig {
        n_hospitals: 4,
        sim_weeks: 1,
        agent_mix: AgentMix {
            outpatient: 150.0,
            passerby: 100.0,
            inpatient: 2.0,
            staff: 5.0,
            neighbor: 2.0,
        },
        ..WorldConfig::default()
    };
    let world = gen_world(&cfg).unwrap();
    let logs = gen_logs(&world);
    (world, logs)
}

fn context(world: &World) -> CensusContext {
    let index = GridIndex::build(&world.hospitals, world.cfg.grid, IndexOptions::default()).unwrap();
    CensusContext::new(index, &world.hospitals, ConfidenceModel::default(), CensusConfig::default(), 1)
}

#[test]
fn partition_is_stable_and_total() {
    let plan = JobPlan::new(8).unwrap();
    for id in 0..100 {
        let w = plan.worker_of(HospitalId(id));
        assert!(w < 8);
        assert_eq!(w, plan.worker_of(HospitalId(id)));
    }
    assert_eq!(JobPlan::new(1).unwrap().worker_of(HospitalId(77)), 0);
    assert!(JobPlan::new(0).is_err());
}

fn run_hours(workers: usize, hours: i64, world: &World, logs: &SynthLogs) -> (Vec<Job1Output>, Vec<Vec<u8>>) {
    let ctx = context(world);
    let plan = JobPlan::new(workers).unwrap();
    let mut states = ctx.fresh_states(world.cfg.start_ts);
    let mut outs = Vec::new();
    for h in 0..hours {
        let start = world.cfg.start_ts + h * HOUR;
        outs.push(run_job1(&plan, &ctx, start, logs.window(start, start + HOUR), &mut states).unwrap());
    }
    let bytes = states.values().map(|s| s.to_bytes()).collect();
    (outs, bytes)
}

#[test]
fn job1_independent_of_worker_count() {
    let (world, logs) = world();
    // Hours 8..14 of Monday carry outpatients.
    let (base, base_states) = run_hours(1, 14, &world, &logs);
    assert!(base.last().unwrap().snapshots.iter().any(|s| s.n_total > 0.0));
    for workers in [2, 8] {
        let (outs, states) = run_hours(workers, 14, &world, &logs);
        assert_eq!(states, base_states);
        for (a, b) in outs.iter().zip(&base) {
            assert_eq!(a.snapshots, b.snapshots);
            assert_eq!(a.n_resolved, b.n_resolved);
        }
        // Every hospital is owned by exactly one worker.
        let last = outs.last().unwrap();
        let mut ids: Vec<_> = last.ownership.iter().map(|(id, _)| *id).collect();
        ids.dedup();
        assert_eq!(ids.len(), world.hospitals.len());
    }
}

#[test]
fn empty_batch_only_decays() {
    let (world, logs) = world();
    let ctx = context(&world);
    let plan = JobPlan::new(3).unwrap();
    let mut states = ctx.fresh_states(world.cfg.start_ts);
    let mut start = world.cfg.start_ts;
    for _ in 0..11 {
        run_job1(&plan, &ctx, start, logs.window(start, start + HOUR), &mut states).unwrap();
        start += HOUR;
    }
    let before = run_job1(&plan, &ctx, start, logs.window(start, start + HOUR), &mut states).unwrap();
    start += HOUR;
    let after = run_job1(&plan, &ctx, start, &[], &mut states).unwrap();
    for (a, b) in before.snapshots.iter().zip(&after.snapshots) {
        // Four ticks per hour: totals shrink by 16 unless items were deleted.
        assert!(b.n_total <= a.n_total / 16.0 + 1e-12);
    }
    assert_eq!(after.n_logs, 0);
}

#[test]
fn logs_outside_window_are_rejected() {
    let (world, logs) = world();
    let ctx = context(&world);
    let mut states = ctx.fresh_states(world.cfg.start_ts);
    let start = world.cfg.start_ts;
    let mut late = logs.logs[0];
    late.ts = start + HOUR;
    let err = run_job1(&JobPlan::new(1).unwrap(), &ctx, start, &[late], &mut states);
    assert!(matches!(err, Err(PipelineError::OutsideWindow { ts, .. }) if ts == start + HOUR));
}

#[test]
fn job2_skips_missing_models_and_is_deterministic() {
    let ids: Vec<HospitalId> = (1..=12).map(HospitalId).collect();
    let histories: BTreeMap<HospitalId, Vec<f64>> = ids
        .iter()
        .map(|&id| (id, (0..4 * WEEK_HOURS).map(|h| ((h % 24) as f64 + id.0 as f64).sin().abs() * 10.0).collect()))
        .collect();
    let all: BTreeMap<HospitalId, DualNet> = ids.iter().map(|&id| (id, DualNet::new(10.0, id.0 as u64))).collect();
    let now = 3 * WEEK_HOURS + 10;
    let base = run_job2(&JobPlan::new(1).unwrap(), &histories, &all, now, 99);
    assert_eq!(base.rows.len(), 12 * 24);
    assert!(base.skipped.is_empty());
    for w in [2, 8] {
        assert_eq!(run_job2(&JobPlan::new(w).unwrap(), &histories, &all, now, 99), base);
    }
    let mut partial = all.clone();
    partial.remove(&HospitalId(5));
    let out = run_job2(&JobPlan::new(4).unwrap(), &histories, &partial, now, 99);
    assert_eq!(out.rows.len(), 11 * 24);
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].0, HospitalId(5));
    let kept: Vec<_> = base.rows.iter().filter(|r| r.hospital_id != HospitalId(5)).copied().collect();
    assert_eq!(out.rows, kept);
}

#[test]
fn runner_chain_rerun_and_breakage() {
    let (world, logs) = world();
    let dir = tempfile::tempdir().unwrap();
    let runner = Runner::init(
        dir.path(),
        &world.hospitals,
        PipelineConfig::new(world.cfg.start_ts, world.cfg.grid),
    )
    .unwrap();
    let plan = JobPlan::new(2).unwrap();
    let manifests = runner.run_hours(&logs.logs, 12, &plan).unwrap();
    assert_eq!(manifests.len(), 12);
    assert_eq!(runner.completed_runs(), 12);
    assert_eq!(manifests[5].prev_run_id, Some(4));
    assert_eq!(manifests[0].prev_run_id, None);

    // Re-running the last hour from its predecessor reproduces it.
    let last = 11;
    let snap_path = dir.path().join(&manifests[last].snapshot_file);
    let state_path = dir.path().join(&manifests[last].state_files[&world.hospitals[0].hospital_id]);
    let (snap_before, state_before) = (std::fs::read(&snap_path).unwrap(), std::fs::read(&state_path).unwrap());
    let (a, b) = runner.window_of(last as u64);
    let reopened = Runner::open(dir.path()).unwrap();
    reopened.run_hour(last as u64, logs.window(a, b), &JobPlan::new(8).unwrap()).unwrap();
    assert_eq!(std::fs::read(&snap_path).unwrap(), snap_before);
    assert_eq!(std::fs::read(&state_path).unwrap(), state_before);

    let histories = runner.histories().unwrap();
    assert!(histories.values().all(|h| h.len() == 12));

    // A missing predecessor state breaks the chain.
    let victim = dir.path().join(&manifests[10].state_files[&world.hospitals[1].hospital_id]);
    std::fs::remove_file(&victim).unwrap();
    assert!(matches!(runner.run_hour(11, &[], &plan), Err(PipelineError::StateChainBroken(_))));
    // So does a state file of the wrong version.
    let mut bytes = state_before.clone();
    bytes[4] = 7;
    std::fs::write(&victim, bytes).unwrap();
    assert!(matches!(runner.run_hour(11, &[], &plan), Err(PipelineError::StateChainBroken(_))));
}

#[test]
fn runner_predict_writes_rows_and_skips() {
    let (world, _) = world();
    let dir = tempfile::tempdir().unwrap();
    let runner = Runner::init(dir.path(), &world.hospitals, PipelineConfig::new(world.cfg.start_ts, world.cfg.grid)).unwrap();
    runner.run_hours(&[], 4, &JobPlan::new(1).unwrap()).unwrap();
    let models = dir.path().join("models");
    std::fs::create_dir_all(&models).unwrap();
    let m = runner.predict(&models, &JobPlan::new(2).unwrap()).unwrap();
    assert_eq!(m.skipped.len(), world.hospitals.len());
    assert_eq!(m.issued_ts, world.cfg.start_ts + 4 * HOUR);
    assert!(runner.prediction_due());
    assert_eq!(runner.latest_prediction().unwrap(), Some(m));
}

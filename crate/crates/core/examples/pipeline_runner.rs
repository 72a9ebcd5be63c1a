//! Drives the persisted hourly pipeline: initializes a state directory, runs
//! three weeks of census hours, trains models and issues a forecast.
//!
//! cargo run --example pipeline_runner

use medcrowd::forecast::TrainConfig;
use medcrowd::pipeline::{train_all, JobPlan, PipelineConfig, Runner};
use medcrowd::synth::{gen_logs, gen_world, AgentMix, WorldConfig};
use medcrowd::WEEK_HOURS;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = gen_world(&WorldConfig {
        n_hospitals: 3,
        sim_weeks: 5,
        agent_mix: AgentMix {
            outpatient: 200.0,
            ..AgentMix::default()
        },
        ..WorldConfig::default()
    })?;
    let logs = gen_logs(&world);
    let dir = tempfile::tempdir()?;
    let state = dir.path().join("state");
    let runner = Runner::init(&state, &world.hospitals, PipelineConfig::new(world.cfg.start_ts, world.cfg.grid))?;
    let plan = JobPlan::new(2)?;

    let manifests = runner.run_hours(&logs.logs, 5 * WEEK_HOURS as u64, &plan)?;
    let last = manifests.last().expect("ran at least one hour");
    println!(
        "{} runs; last window [{}, {}) resolved {} of {} logs",
        runner.completed_runs(),
        last.window_start,
        last.window_end,
        last.n_resolved,
        last.n_logs
    );

    let models = dir.path().join("models");
    std::fs::create_dir_all(&models)?;
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    for (id, trained) in train_all(&plan, &runner.histories()?, 5, &cfg) {
        let (net, curve) = trained?;
        net.save(&models.join(format!("h{id}.dsnn")))?;
        println!("hospital {id}: best epoch {} of {}", curve.best_epoch, cfg.epochs);
    }

    let prediction = runner.predict(&models, &plan)?;
    println!(
        "forecast issued at {} written to {} ({} skipped)",
        prediction.issued_ts,
        prediction.prediction_file,
        prediction.skipped.len()
    );
    let rows = medcrowd::forecast::read_predictions_csv(&state.join(&prediction.prediction_file))?;
    for r in rows.iter().filter(|r| r.horizon_hour <= 3) {
        println!("  hospital {} +{}h: {:.1}", r.hospital_id, r.horizon_hour, r.value);
    }
    Ok(())
}

//! Streams one synthetic day through the hourly census job and prints the
//! density strata of the busiest hospital next to the ground truth.
//!
//! cargo run --example census_stream

use medcrowd::census::{BlacklistReason, CensusConfig, ConfidenceModel};
use medcrowd::geogrid::{GridIndex, IndexOptions};
use medcrowd::pipeline::{run_job1, CensusContext, JobPlan};
use medcrowd::synth::{gen_logs, gen_world, WorldConfig};
use medcrowd::HOUR;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = gen_world(&WorldConfig {
        n_hospitals: 3,
        sim_weeks: 1,
        ..WorldConfig::default()
    })?;
    let logs = gen_logs(&world);
    let index = GridIndex::build(&world.hospitals, world.cfg.grid, IndexOptions::default())?;
    let ctx = CensusContext::new(index, &world.hospitals, ConfidenceModel::default(), CensusConfig::default(), 1);
    let mut states = ctx.fresh_states(world.cfg.start_ts);
    let plan = JobPlan::new(2)?;

    let busiest = world
        .sites
        .iter()
        .max_by(|a, b| a.popularity.total_cmp(&b.popularity))
        .map(|s| s.hospital_id)
        .expect("at least one hospital");
    let truth = logs.truth.series(busiest).unwrap_or(&[]);
    println!("hospital {busiest}: hour  total  >2h  >4h  >6h  truth");
    // Monday and Tuesday: the blacklist needs a few days to learn the staff.
    for h in 0..48 {
        let start = world.cfg.start_ts + h as i64 * HOUR;
        let out = run_job1(&plan, &ctx, start, logs.window(start, start + HOUR), &mut states)?;
        if h >= 24 {
            let s = out.snapshots.iter().find(|s| s.hospital_id == busiest).expect("snapshot per hospital");
            println!(
                "              {:>4}  {:>5.1} {:>4.1} {:>4.1} {:>4.1}  {:>5}",
                h % 24,
                s.n_total,
                s.n_over_2h,
                s.n_over_4h,
                s.n_over_6h,
                truth[h]
            );
        }
    }
    let state = &states[&busiest];
    let long = state.blacklist().values().filter(|e| e.reason == BlacklistReason::LongStay).count();
    println!(
        "after two days: {} counting items, {} blacklisted ({long} long stays)",
        state.items().len(),
        state.blacklist().len()
    );
    Ok(())
}

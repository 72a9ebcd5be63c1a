//! Ranks hospitals for a user and answers the same question through the
//! JSON API, in process.
//!
//! cargo run --example recommend

use std::collections::BTreeMap;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use medcrowd::census::DensitySnapshot;
use medcrowd::pipeline::{JobPlan, PipelineConfig, Runner};
use medcrowd::recsvc::{router, AppState, CrowdConfig, LatLng, Ranker, Weights};
use medcrowd::synth::{gen_logs, gen_world, WorldConfig};

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = gen_world(&WorldConfig {
        n_hospitals: 5,
        sim_weeks: 1,
        ..WorldConfig::default()
    })?;
    let grid = world.cfg.grid;
    let user = LatLng::new(grid.ref_lat + 0.01, grid.ref_lng - 0.01);

    // Direct use: a made-up rush at the first hospital.
    let ranker = Ranker::new(grid, CrowdConfig::default());
    let mut snapshots = BTreeMap::new();
    for (i, h) in world.hospitals.iter().enumerate() {
        let mut s = DensitySnapshot::empty(h.hospital_id, world.cfg.start_ts);
        s.n_total = if i == 0 { 5.0 * f64::from(h.n_doctors) } else { 0.5 * f64::from(h.n_doctors) };
        snapshots.insert(h.hospital_id, s);
    }
    for weights in [Weights::default(), Weights::new(1.0, 0.0, 0.0)?] {
        println!("weights {weights:?}");
        for e in ranker.rank(user, &world.hospitals, &snapshots, &weights)? {
            println!(
                "  {:<24} class {} {:>7.0} m  {:?} (load {:.2})  score {:.3}",
                e.name, e.official_class, e.distance_m, e.crowd.level, e.crowd.load, e.score
            );
        }
    }

    // Through the API, over a state directory fed with Monday morning.
    let logs = gen_logs(&world);
    let dir = tempfile::tempdir()?;
    let runner = Runner::init(dir.path(), &world.hospitals, PipelineConfig::new(world.cfg.start_ts, grid))?;
    runner.run_hours(&logs.logs, 10, &JobPlan::new(1)?)?;
    let app = router(AppState::new(runner, CrowdConfig::default(), JobPlan::new(1)?)?);
    let uri = format!("/api/hospitals?lat={}&lng={}&w_dist=0.2&w_crowd=0.6&w_class=0.2", user.lat, user.lng);
    let response = app.oneshot(Request::get(uri).body(Body::empty())?).await?;
    println!("GET /api/hospitals -> {}", response.status());
    let body = response.into_body().collect().await?.to_bytes();
    let list: serde_json::Value = serde_json::from_slice(&body)?;
    println!("{}", serde_json::to_string_pretty(&list)?);
    Ok(())
}

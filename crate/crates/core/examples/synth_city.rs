//! Generates a small synthetic city and writes its catalog, logs, truth and
//! labels, the same files `medcrowd synth` produces.
//!
//! cargo run --example synth_city -- [out_dir]

use std::collections::BTreeMap;
use std::path::PathBuf;

use medcrowd::geogrid::write_catalog;
use medcrowd::synth::{gen_logs, gen_world, write_labels_jsonl, write_logs, write_truth_csv, WorldConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("medcrowd-city"));
    let cfg = WorldConfig {
        n_hospitals: 3,
        sim_weeks: 1,
        ..WorldConfig::default()
    };
    let world = gen_world(&cfg)?;
    let logs = gen_logs(&world);

    let mut kinds = BTreeMap::new();
    for a in &world.agents {
        *kinds.entry(format!("{:?}", a.kind)).or_insert(0usize) += 1;
    }
    println!("agents by kind: {kinds:?}");
    let inside = logs.inside.iter().filter(|&&b| b).count();
    println!("{} logs, {inside} with the true position on hospital grounds", logs.logs.len());

    // Outpatients present at the end of each Tuesday hour at the first hospital.
    let id = world.hospitals[0].hospital_id;
    let tuesday: Vec<u32> = logs.truth.series(id).unwrap_or(&[])[24..48].to_vec();
    println!("{} on Tuesday: {tuesday:?}", world.hospitals[0].name);

    std::fs::create_dir_all(&out)?;
    write_catalog(&out.join("catalog.json"), &world.hospitals)?;
    write_logs(&out.join("logs.jsonl.gz"), &logs.logs)?;
    write_truth_csv(&out.join("truth.csv"), &logs.truth)?;
    write_labels_jsonl(&out.join("labels.jsonl"), &logs.truth)?;
    println!("wrote {}", out.display());
    Ok(())
}

//! Builds the cell index over a synthetic hospital catalog, resolves a few
//! points and round-trips the index through its snapshot file.
//!
//! cargo run --example grid_index

use medcrowd::geogrid::{cell_of, GridIndex, IndexOptions};
use medcrowd::synth::{gen_world, WorldConfig};
use medcrowd::{LbsLog, Uid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = gen_world(&WorldConfig {
        n_hospitals: 4,
        ..WorldConfig::default()
    })?;
    let grid = world.cfg.grid;
    let index = GridIndex::build(&world.hospitals, grid, IndexOptions::default())?;
    println!(
        "{} cells over {} hospitals, filter load {:.3}",
        index.len(),
        world.hospitals.len(),
        index.filter().load_factor()
    );

    for h in &world.hospitals {
        let (lat, lng) = h.centroid(&grid);
        let log = LbsLog {
            uid: Uid(1),
            ts: world.cfg.start_ts,
            lat,
            lng,
            r: 20.0,
        };
        println!(
            "{:<24} centroid ({lat:.5}, {lng:.5}) cell {:?} -> {:?}",
            h.name,
            cell_of(lat, lng, &grid),
            index.resolve(&log)
        );
    }
    println!("reference point -> {:?}", index.resolve_point(grid.ref_lat, grid.ref_lng));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("index.dsgi");
    index.save(&path)?;
    let loaded = GridIndex::load(&path)?;
    println!("snapshot {} bytes, reload identical: {}", std::fs::metadata(&path)?.len(), loaded.to_bytes() == index.to_bytes());
    Ok(())
}

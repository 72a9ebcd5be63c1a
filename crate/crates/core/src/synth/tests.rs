use super::*;
use crate::WEEK_HOURS;

fn small_cfg(n_hospitals: usize) -> WorldConfig {
    WorldConfig {
        n_hospitals,
        sim_weeks: 1,
        agent_mix: AgentMix {
            outpatient: 120.0,
            passerby: 80.0,
            inpatient: 2.0,
            staff: 6.0,
            neighbor: 2.0,
        },
        background_logs_per_hour: 20.0,
        ..WorldConfig::default()
    }
}

#[test]
fn single_hospital_lies_inside_extent() {
    let world = gen_world(&small_cfg(1)).unwrap();
    assert_eq!(world.hospitals.len(), 1);
    let half = world.cfg.city_extent_m / 2.0;
    let site = &world.sites[0];
    assert!(site
        .polygon
        .vertices()
        .iter()
        .all(|&(x, y)| x.abs() < half && y.abs() < half));
    let ((x0, y0), (x1, y1)) = site.polygon.bbox();
    let across = (x1 - x0).max(y1 - y0);
    assert!((100.0..=400.0).contains(&across), "{across}");
    world.hospitals[0].validate(&world.cfg.grid).unwrap();
}

#[test]
fn same_seed_same_world_and_logs() {
    let cfg = small_cfg(3);
    let (a, b) = (gen_world(&cfg).unwrap(), gen_world(&cfg).unwrap());
    assert_eq!(a.to_json_bytes(), b.to_json_bytes());
    let (la, lb) = (gen_logs(&a), gen_logs(&b));
    assert_eq!(la.logs, lb.logs);
    assert_eq!(la.truth, lb.truth);

    let other = gen_world(&WorldConfig { seed: 7, ..cfg }).unwrap();
    assert_ne!(a.to_json_bytes(), other.to_json_bytes());
}

#[test]
fn tuesday_busier_than_friday_everywhere() {
    let world = gen_world(&WorldConfig {
        sim_weeks: 1,
        ..WorldConfig::default()
    })
    .unwrap();
    let day_mean = |site: usize, day: usize| {
        (0..24)
            .map(|h| world.expected_outpatient_arrivals(site, day * 24 + h))
            .sum::<f64>()
            / 24.0
    };
    for site in 0..world.sites.len() {
        assert!(day_mean(site, 1) > day_mean(site, 4));
    }
}

#[test]
fn midday_valley_in_outpatient_profile() {
    let p = ArrivalProfile::outpatient();
    let valley = p.hour_of_day[11].max(p.hour_of_day[12]);
    assert!(valley < p.hour_of_day[10] && valley < p.hour_of_day[13]);
}

#[test]
fn agent_dwell_bounds_hold() {
    let world = gen_world(&small_cfg(3)).unwrap();
    for agent in &world.agents {
        for v in &agent.schedule {
            let d = v.dwell_s();
            match agent.kind {
                AgentKind::Passerby => assert!(d < 1200),
                AgentKind::Outpatient => assert!((1800..=6 * HOUR).contains(&d)),
                AgentKind::Inpatient => assert!(d >= 24 * HOUR),
                AgentKind::Staff => assert!((8 * HOUR..=10 * HOUR).contains(&d)),
                AgentKind::Neighbor => assert!(d < 2 * HOUR),
            }
        }
        if agent.kind == AgentKind::Staff {
            let mut days: Vec<i64> = agent
                .schedule
                .iter()
                .map(|v| (v.arrive_ts - world.cfg.start_ts).div_euclid(crate::DAY))
                .collect();
            days.dedup();
            assert!(days.len() >= 5);
        }
    }
}

#[test]
fn logs_sorted_and_inside_flags_match_geometry() {
    let world = gen_world(&small_cfg(2)).unwrap();
    let out = gen_logs(&world);
    assert!(out.logs.windows(2).all(|w| w[0].ts <= w[1].ts));
    assert_eq!(out.logs.len(), out.inside.len());
    assert!(out.logs.iter().all(|l| l.r >= 10.0 && l.r <= 100.0));
    assert!(out.inside.iter().any(|&b| b));
    let w = out.window(world.cfg.start_ts + HOUR, world.cfg.start_ts + 2 * HOUR);
    assert!(w.iter().all(|l| l.ts >= world.cfg.start_ts + HOUR && l.ts < world.cfg.start_ts + 2 * HOUR));
}

#[test]
fn two_hour_visit_yields_about_twelve_logs() {
    let mut world = gen_world(&WorldConfig {
        background_logs_per_hour: 0.0,
        ..small_cfg(1)
    })
    .unwrap();
    let (x, y) = world.sites[0].polygon.centroid();
    let id = world.sites[0].hospital_id;
    let start = world.cfg.start_ts;
    world.agents = (0..2000u64)
        .map(|n| Agent {
            uid: Uid(n),
            kind: AgentKind::Outpatient,
            schedule: vec![Visit {
                hospital_id: id,
                arrive_ts: start + 3600,
                depart_ts: start + 3600 + 7200,
                path: Path::Stay { x, y },
            }],
        })
        .collect();
    let out = gen_logs(&world);
    let mean = out.logs.len() as f64 / 2000.0;
    assert!((mean - 12.0).abs() < 0.3, "{mean}");
}

#[test]
fn true_position_outside_radius_matches_rayleigh_tail() {
    let world = gen_world(&small_cfg(1)).unwrap();
    let mut rng = rng_for(3, &[]);
    let n = 400_000;
    let mut outside = 0usize;
    for _ in 0..n {
        let (ox, oy, r) = noisy(&world, 0.0, 0.0, &mut rng);
        outside += (ox.hypot(oy) > r) as usize;
    }
    let frac = outside as f64 / n as f64;
    // P(|N₂(0, (r/3)²I)| > r) = exp(−9/2) ≈ 1.11%.
    let expected = (-4.5f64).exp();
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((frac - expected).abs() < 4.0 * se, "{frac}");
    assert!(frac <= 0.0115);
}

#[test]
fn no_one_counted_at_three_am() {
    let world = gen_world(&small_cfg(3)).unwrap();
    let truth = ground_truth(&world);
    assert_eq!(truth.hours(), WEEK_HOURS);
    for series in &truth.counts {
        for day in 0..7 {
            assert_eq!(series[day * 24 + 3], 0);
        }
    }
}

#[test]
fn ground_truth_matches_brute_force() {
    let world = gen_world(&small_cfg(2)).unwrap();
    let truth = ground_truth(&world);
    for (k, id) in truth.hospital_ids.iter().enumerate() {
        for h in 0..truth.hours() {
            let end = world.cfg.start_ts + (h as i64 + 1) * HOUR;
            let expect = world
                .agents
                .iter()
                .filter(|a| a.kind == AgentKind::Outpatient)
                .flat_map(|a| &a.schedule)
                .filter(|v| v.hospital_id == *id && v.arrive_ts + 1200 <= end && end < v.depart_ts)
                .count();
            assert_eq!(truth.counts[k][h] as usize, expect, "hospital {id} hour {h}");
        }
    }
    let some = world.agents[0].uid;
    assert_eq!(truth.label(some), Some(world.agents[0].kind));
}

#[test]
fn log_files_roundtrip_plain_and_gzip() {
    let world = gen_world(&small_cfg(1)).unwrap();
    let out = gen_logs(&world);
    let dir = tempfile::tempdir().unwrap();
    for name in ["logs.jsonl", "logs.jsonl.gz"] {
        let p = dir.path().join(name);
        write_logs(&p, &out.logs[..500]).unwrap();
        assert_eq!(read_logs(&p).unwrap(), out.logs[..500].to_vec());
    }
    let truth_path = dir.path().join("truth.csv");
    write_truth_csv(&truth_path, &out.truth).unwrap();
    let text = std::fs::read_to_string(&truth_path).unwrap();
    assert_eq!(text.lines().count(), 1 + WEEK_HOURS);
    write_labels_jsonl(&dir.path().join("labels.jsonl"), &out.truth).unwrap();
}

#[test]
fn stress_hour_has_requested_size_and_share() {
    let world = gen_world(&small_cfg(3)).unwrap();
    let logs = stress_hour(&world, world.cfg.start_ts, 20_000, 0.1, 5);
    assert_eq!(logs.len(), 20_000);
    assert!(logs.windows(2).all(|w| w[0].ts <= w[1].ts));
    let on_site = logs.iter().filter(|l| l.uid.0 < BACKGROUND_UID_BASE).count();
    assert!((1_600..2_400).contains(&on_site), "{on_site}");
}

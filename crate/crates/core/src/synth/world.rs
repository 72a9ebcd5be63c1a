use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{rng_for, SynthError, WorldConfig};
use crate::geogrid::{unproject, HospitalRecord, PlanarPolygon};
use crate::{HospitalId, Uid, DAY, HOUR};

const PLACEMENT_ATTEMPTS: usize = 2000;
/// Gap kept between hospital outlines so passerby walks stay unambiguous.
const MIN_GAP_M: f64 = 300.0;
/// Agents stand within the polygon shrunk by this factor about its centroid.
const CORE_SCALE: f64 = 0.7;
const WALK_SPEED_MPS: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    Outpatient,
    Passerby,
    Inpatient,
    Staff,
    Neighbor,
}

impl AgentKind {
    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Where the agent is while on site, in projected meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Path {
    Stay { x: f64, y: f64 },
    Walk { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Path {
    /// Position at fraction `f ∈ [0, 1]` of the visit.
    pub fn at(&self, f: f64) -> (f64, f64) {
        match *self {
            Path::Stay { x, y } => (x, y),
            Path::Walk { x0, y0, x1, y1 } => (x0 + f * (x1 - x0), y0 + f * (y1 - y0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub hospital_id: HospitalId,
    pub arrive_ts: i64,
    pub depart_ts: i64,
    pub path: Path,
}

impl Visit {
    pub fn dwell_s(&self) -> i64 {
        self.depart_ts - self.arrive_ts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub uid: Uid,
    pub kind: AgentKind,
    pub schedule: Vec<Visit>,
}

/// Generator-side view of a hospital.
#[derive(Debug, Clone)]
pub struct Site {
    pub hospital_id: HospitalId,
    pub polygon: PlanarPolygon,
    pub core: PlanarPolygon,
    /// Multiplier on the outpatient arrival rate.
    pub popularity: f64,
}

#[derive(Debug, Clone)]
pub struct World {
    pub cfg: WorldConfig,
    pub hospitals: Vec<HospitalRecord>,
    pub sites: Vec<Site>,
    pub agents: Vec<Agent>,
}

impl World {
    /// Expected outpatient arrivals at `site` during `hour_of_week`.
    pub fn expected_outpatient_arrivals(&self, site: usize, hour_of_week: usize) -> f64 {
        self.cfg
            .outpatient_profile
            .hourly_mean(self.cfg.agent_mix.outpatient * self.sites[site].popularity, hour_of_week)
    }

    pub fn site(&self, id: HospitalId) -> Option<&Site> {
        self.sites.iter().find(|s| s.hospital_id == id)
    }

    /// Stable JSON of the hospitals and agents.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&(&self.hospitals, &self.agents)).expect("world serializes")
    }
}

fn uid_for(site: usize, kind: AgentKind, n: u64) -> Uid {
    Uid(((site as u64 + 1) << 40) | (kind.tag() << 36) | n)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

fn sample_in(poly: &PlanarPolygon, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let ((x0, y0), (x1, y1)) = poly.bbox();
    loop {
        let (x, y) = (rng.random_range(x0..x1), rng.random_range(y0..y1));
        if poly.contains(x, y) {
            return (x, y);
        }
    }
}

fn scaled(poly: &PlanarPolygon, k: f64) -> PlanarPolygon {
    let (cx, cy) = poly.centroid();
    PlanarPolygon::new(
        poly.vertices()
            .iter()
            .map(|&(x, y)| (cx + k * (x - cx), cy + k * (y - cy)))
            .collect(),
    )
}

fn place_hospitals(cfg: &WorldConfig) -> Result<(Vec<HospitalRecord>, Vec<Site>), SynthError> {
    let mut rng = rng_for(cfg.seed, &[0x504C_4143]);
    let half = cfg.city_extent_m / 2.0 - 500.0;
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut hospitals = Vec::new();
    let mut sites = Vec::new();
    for i in 0..cfg.n_hospitals {
        let mut attempt = 0;
        let (cx, cy, rx, ry) = loop {
            attempt += 1;
            if attempt > PLACEMENT_ATTEMPTS {
                return Err(SynthError::Placement {
                    placed: i,
                    wanted: cfg.n_hospitals,
                });
            }
            let rx: f64 = rng.random_range(50.0..200.0);
            let ry: f64 = rng.random_range(50.0..200.0);
            let cx = rng.random_range(-half..half);
            let cy = rng.random_range(-half..half);
            let reach = rx.max(ry);
            if placed
                .iter()
                .all(|&(px, py, pr)| ((px - cx).powi(2) + (py - cy).powi(2)).sqrt() > pr + reach + MIN_GAP_M)
            {
                placed.push((cx, cy, reach));
                break (cx, cy, rx, ry);
            }
        };
        // Polygon inscribed in a rotated ellipse: convex by construction.
        let n_vertices = rng.random_range(6..=12);
        let rotation: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let pts: Vec<(f64, f64)> = (0..n_vertices)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n_vertices as f64;
                let (ex, ey) = (rx * t.cos(), ry * t.sin());
                (
                    cx + ex * rotation.cos() - ey * rotation.sin(),
                    cy + ex * rotation.sin() + ey * rotation.cos(),
                )
            })
            .collect();
        let planar = PlanarPolygon::new(pts.clone());
        let area = planar.area();
        let id = HospitalId(i as u32 + 1);
        hospitals.push(HospitalRecord {
            hospital_id: id,
            name: format!("Hospital {:02}", i + 1),
            official_class: rng.random_range(1..=9),
            polygon: pts
                .iter()
                .map(|&(x, y)| {
                    let (lat, lng) = unproject(x, y, &cfg.grid);
                    [lat, lng]
                })
                .collect(),
            area_m2: area,
            n_doctors: ((area / 500.0).round() as u32).clamp(20, 400),
        });
        sites.push(Site {
            hospital_id: id,
            core: scaled(&planar, CORE_SCALE),
            polygon: planar,
            popularity: rng.random_range(0.6..1.4),
        });
    }
    Ok((hospitals, sites))
}

/// Generates hospitals and a labelled agent population.
pub fn gen_world(cfg: &WorldConfig) -> Result<World, SynthError> {
    cfg.validate()?;
    let (hospitals, sites) = place_hospitals(cfg)?;
    let mut agents = Vec::new();
    for (i, site) in sites.iter().enumerate() {
        agents.extend(outpatients(cfg, i, site));
        agents.extend(passersby(cfg, i, site));
        agents.extend(inpatients(cfg, i, site));
        agents.extend(staff(cfg, i, site));
        agents.extend(neighbors(cfg, i, site));
    }
    agents.sort_by_key(|a| a.uid);
    Ok(World {
        cfg: cfg.clone(),
        hospitals,
        sites,
        agents,
    })
}

fn outpatients(cfg: &WorldConfig, i: usize, site: &Site) -> Vec<Agent> {
    let kind = AgentKind::Outpatient;
    let mut rng = rng_for(cfg.seed, &[i as u64, kind.tag()]);
    let dwell = LogNormal::new((120.0f64).ln(), 0.5).unwrap();
    let rate = cfg.agent_mix.outpatient * site.popularity;
    let mut out = Vec::new();
    for h in 0..cfg.total_hours() {
        let n = poisson(&mut rng, cfg.outpatient_profile.hourly_mean(rate, h % crate::WEEK_HOURS));
        for _ in 0..n {
            let arrive = cfg.start_ts + h as i64 * HOUR + rng.random_range(0..HOUR);
            let minutes: f64 = dwell.sample(&mut rng);
            let minutes = minutes.clamp(30.0, 360.0);
            let (x, y) = sample_in(&site.core, &mut rng);
            out.push(Agent {
                uid: uid_for(i, kind, out.len() as u64),
                kind,
                schedule: vec![Visit {
                    hospital_id: site.hospital_id,
                    arrive_ts: arrive,
                    depart_ts: arrive + (minutes * 60.0) as i64,
                    path: Path::Stay { x, y },
                }],
            });
        }
    }
    out
}

fn passersby(cfg: &WorldConfig, i: usize, site: &Site) -> Vec<Agent> {
    let kind = AgentKind::Passerby;
    let mut rng = rng_for(cfg.seed, &[i as u64, kind.tag()]);
    let mut out = Vec::new();
    for h in 0..cfg.total_hours() {
        let n = poisson(
            &mut rng,
            cfg.passerby_profile
                .hourly_mean(cfg.agent_mix.passerby, h % crate::WEEK_HOURS),
        );
        for _ in 0..n {
            let arrive = cfg.start_ts + h as i64 * HOUR + rng.random_range(0..HOUR);
            // Whole walk, approach included, stays under 20 minutes.
            let secs = rng.random_range(180..900);
            let half_len = WALK_SPEED_MPS * secs as f64 / 2.0;
            let (px, py) = sample_in(&site.core, &mut rng);
            let theta: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let (dx, dy) = (theta.cos() * half_len, theta.sin() * half_len);
            out.push(Agent {
                uid: uid_for(i, kind, out.len() as u64),
                kind,
                schedule: vec![Visit {
                    hospital_id: site.hospital_id,
                    arrive_ts: arrive,
                    depart_ts: arrive + secs,
                    path: Path::Walk {
                        x0: px - dx,
                        y0: py - dy,
                        x1: px + dx,
                        y1: py + dy,
                    },
                }],
            });
        }
    }
    out
}

fn inpatients(cfg: &WorldConfig, i: usize, site: &Site) -> Vec<Agent> {
    let kind = AgentKind::Inpatient;
    let mut rng = rng_for(cfg.seed, &[i as u64, kind.tag()]);
    let rate = cfg.agent_mix.inpatient;
    let mut out = Vec::new();
    let push = |rng: &mut ChaCha8Rng, arrive: i64, depart: i64, out: &mut Vec<Agent>| {
        let (x, y) = sample_in(&site.core, rng);
        out.push(Agent {
            uid: uid_for(i, kind, out.len() as u64),
            kind,
            schedule: vec![Visit {
                hospital_id: site.hospital_id,
                arrive_ts: arrive,
                depart_ts: depart,
                path: Path::Stay { x, y },
            }],
        });
    };
    // Ward occupancy at the start: admitted earlier, staying at least a day more.
    for _ in 0..poisson(&mut rng, rate * 3.0) {
        let arrive = cfg.start_ts - rng.random_range(DAY / 2..3 * DAY);
        let depart = cfg.start_ts + rng.random_range(DAY..4 * DAY);
        push(&mut rng, arrive, depart, &mut out);
    }
    for h in 0..cfg.total_hours() {
        let n = poisson(
            &mut rng,
            cfg.admission_profile.hourly_mean(rate, h % crate::WEEK_HOURS),
        );
        for _ in 0..n {
            let arrive = cfg.start_ts + h as i64 * HOUR + rng.random_range(0..HOUR);
            let depart = arrive + rng.random_range(DAY..5 * DAY);
            push(&mut rng, arrive, depart, &mut out);
        }
    }
    out
}

/// Distinct weekdays, `count` of them, ascending.
fn pick_days(rng: &mut ChaCha8Rng, count: usize) -> Vec<i64> {
    let mut days: Vec<i64> = (0..7).collect();
    for k in (1..7).rev() {
        let j = rng.random_range(0..=k);
        days.swap(k, j);
    }
    let mut chosen = days[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

fn staff(cfg: &WorldConfig, i: usize, site: &Site) -> Vec<Agent> {
    let kind = AgentKind::Staff;
    let mut rng = rng_for(cfg.seed, &[i as u64, kind.tag()]);
    let roster = (cfg.agent_mix.staff * 7.0 / 5.5).round() as usize;
    (0..roster)
        .map(|n| {
            let (x, y) = sample_in(&site.core, &mut rng);
            let mut schedule = Vec::new();
            for week in 0..cfg.sim_weeks as i64 {
                let n_days = if rng.random_bool(0.5) { 5 } else { 6 };
                for day in pick_days(&mut rng, n_days) {
                    let arrive = cfg.start_ts
                        + (week * 7 + day) * DAY
                        + 7 * HOUR
                        + rng.random_range(0..2 * HOUR);
                    let depart = arrive + rng.random_range(8 * HOUR..=10 * HOUR);
                    schedule.push(Visit {
                        hospital_id: site.hospital_id,
                        arrive_ts: arrive,
                        depart_ts: depart,
                        path: Path::Stay { x, y },
                    });
                }
            }
            Agent {
                uid: uid_for(i, kind, n as u64),
                kind,
                schedule,
            }
        })
        .collect()
}

fn neighbors(cfg: &WorldConfig, i: usize, site: &Site) -> Vec<Agent> {
    let kind = AgentKind::Neighbor;
    let mut rng = rng_for(cfg.seed, &[i as u64, kind.tag()]);
    let roster = (cfg.agent_mix.neighbor * 7.0 / 5.0).round() as usize;
    (0..roster)
        .map(|n| {
            let mut schedule = Vec::new();
            for week in 0..cfg.sim_weeks as i64 {
                let n_days = rng.random_range(4..=6);
                for day in pick_days(&mut rng, n_days) {
                    let (x, y) = sample_in(&site.core, &mut rng);
                    let arrive = cfg.start_ts
                        + (week * 7 + day) * DAY
                        + rng.random_range(6 * HOUR..21 * HOUR);
                    schedule.push(Visit {
                        hospital_id: site.hospital_id,
                        arrive_ts: arrive,
                        depart_ts: arrive + rng.random_range(25 * 60..70 * 60),
                        path: Path::Stay { x, y },
                    });
                }
            }
            Agent {
                uid: uid_for(i, kind, n as u64),
                kind,
                schedule,
            }
        })
        .collect()
}

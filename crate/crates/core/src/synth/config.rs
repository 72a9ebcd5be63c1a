use serde::{Deserialize, Serialize};

use crate::geogrid::GridConfig;

/// Agent volumes per hospital.
///
/// `outpatient`, `passerby` and `inpatient` are mean arrivals per day.
/// `staff` and `neighbor` are the mean number present on a given day; the
/// generator derives a fixed roster from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentMix {
    pub outpatient: f64,
    pub passerby: f64,
    pub inpatient: f64,
    pub staff: f64,
    pub neighbor: f64,
}

impl Default for AgentMix {
    fn default() -> Self {
        AgentMix {
            outpatient: 400.0,
            passerby: 300.0,
            inpatient: 4.0,
            staff: 20.0,
            neighbor: 5.0,
        }
    }
}

/// Piecewise-constant arrival multipliers.
///
/// Daily mean arrivals on weekday `d` (0 = Monday) are
/// `rate · day_of_week[d]`, split across the hours of that day in proportion
/// to `hour_of_day`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalProfile {
    pub hour_of_day: [f64; 24],
    pub day_of_week: [f64; 7],
}

impl ArrivalProfile {
    /// Outpatient clinics: morning peak, a valley from 11:00 to 13:00, a
    /// smaller afternoon peak; Tuesday busiest on weekdays, Friday quietest.
    pub fn outpatient() -> Self {
        ArrivalProfile {
            hour_of_day: [
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, // 00-05
                0.2, 0.9, 1.6, 1.8, 1.5, // 06-10
                0.6, 0.4, // 11-12 valley
                1.2, 1.5, 1.3, 0.9, 0.5, 0.25, 0.1, // 13-19
                0.0, 0.0, 0.0, 0.0, // 20-23
            ],
            day_of_week: [1.05, 1.25, 1.1, 1.0, 0.8, 0.55, 0.45],
        }
    }

    /// Pedestrians on the surrounding streets.
    pub fn passerby() -> Self {
        ArrivalProfile {
            hour_of_day: [
                0.1, 0.05, 0.05, 0.05, 0.05, 0.2, 0.5, 1.2, 1.6, 1.2, 1.0, 1.0, 1.1, 1.0, 1.0, 1.0,
                1.1, 1.5, 1.6, 1.2, 0.8, 0.5, 0.3, 0.2,
            ],
            day_of_week: [1.0, 1.0, 1.0, 1.0, 1.0, 0.9, 0.8],
        }
    }

    /// Elective admissions: office hours, weekdays and Saturday only.
    pub fn admissions() -> Self {
        let mut hour_of_day = [0.0; 24];
        for h in hour_of_day.iter_mut().take(17).skip(8) {
            *h = 1.0;
        }
        ArrivalProfile {
            hour_of_day,
            day_of_week: [1.0, 1.0, 1.0, 1.0, 1.0, 0.6, 0.0],
        }
    }

    /// Mean arrivals during hour `hour_of_week` for a daily `rate`.
    pub fn hourly_mean(&self, rate: f64, hour_of_week: usize) -> f64 {
        let total: f64 = self.hour_of_day.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let (day, hour) = (hour_of_week / 24 % 7, hour_of_week % 24);
        rate * self.day_of_week[day] * self.hour_of_day[hour] / total
    }
}

/// Everything that determines a synthetic world and its log stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub n_hospitals: usize,
    /// Side of the square city, centred on the grid reference point.
    pub city_extent_m: f64,
    pub sim_weeks: usize,
    pub seed: u64,
    pub agent_mix: AgentMix,
    pub grid: GridConfig,
    /// Unix time of the first simulated second; should be a Monday 00:00 UTC.
    pub start_ts: i64,
    /// Mean seconds between logs of an agent on site.
    pub log_interval_s: f64,
    /// Scales the true positioning noise relative to the `r/3` the census
    /// assumes; 0 gives perfect positions.
    pub noise_mismatch: f64,
    /// Logs per hour from the general population, uniform over the city.
    pub background_logs_per_hour: f64,
    pub outpatient_profile: ArrivalProfile,
    pub passerby_profile: ArrivalProfile,
    pub admission_profile: ArrivalProfile,
}

/// 2024-01-01 00:00:00 UTC, a Monday.
pub const DEFAULT_START_TS: i64 = 1_704_067_200;

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            n_hospitals: 12,
            city_extent_m: 20_000.0,
            sim_weeks: 10,
            seed: 20_180_101,
            agent_mix: AgentMix::default(),
            grid: GridConfig::default(),
            start_ts: DEFAULT_START_TS,
            log_interval_s: 600.0,
            noise_mismatch: 1.0,
            background_logs_per_hour: 200.0,
            outpatient_profile: ArrivalProfile::outpatient(),
            passerby_profile: ArrivalProfile::passerby(),
            admission_profile: ArrivalProfile::admissions(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), super::SynthError> {
        let m = &self.agent_mix;
        let rates = [m.outpatient, m.passerby, m.inpatient, m.staff, m.neighbor];
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(super::SynthError::Config("agent rates must be finite and ≥ 0".into()));
        }
        if self.sim_weeks == 0 {
            return Err(super::SynthError::Config("sim_weeks must be ≥ 1".into()));
        }
        if !(self.log_interval_s > 0.0) {
            return Err(super::SynthError::Config("log interval must be positive".into()));
        }
        if !(self.noise_mismatch >= 0.0) || !(self.background_logs_per_hour >= 0.0) {
            return Err(super::SynthError::Config("noise and background must be ≥ 0".into()));
        }
        if !(self.city_extent_m > 1000.0) {
            return Err(super::SynthError::Config("city extent must exceed 1 km".into()));
        }
        self.grid
            .validate()
            .map_err(|e| super::SynthError::Config(e.to_string()))
    }

    pub fn total_hours(&self) -> usize {
        self.sim_weeks * crate::WEEK_HOURS
    }

    pub fn end_ts(&self) -> i64 {
        self.start_ts + self.total_hours() as i64 * crate::HOUR
    }
}

//! Seeded synthetic occupancy for a five-service prayer hall.
//!
//! Each scheduled service draws a crowd that ramps up linearly before the
//! service, stays for a plateau and leaves quickly. The Friday midday service
//! is several times larger. Sample counts carry small integer jitter and rare
//! stray visitors appear between services. The matching crossing-event
//! stream replays to the trace exactly.

use occmpc_core::counter::{CrossingEvent, Direction, DEFAULT_IDLE_TIMEOUT};
use occmpc_core::forecast::{day_of_week, SECONDS_PER_DAY};
use occmpc_core::TimeSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Monday 2024-01-01 00:00 UTC.
pub const DEFAULT_START: i64 = 1_704_067_200;
const FRIDAY: u8 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub days: u32,
    /// Midnight UTC of the first day.
    pub start: i64,
    pub step: i64,
    pub capacity: f64,
    /// Service times on the first day, minutes after midnight.
    pub service_minutes: Vec<f64>,
    /// Daily shift of every service time, minutes.
    pub drift_minutes_per_day: f64,
    /// Typical crowd as a share of capacity.
    pub base_peak: f64,
    /// Relative spread of the crowd size, uniform in `1 ± peak_jitter`.
    pub peak_jitter: f64,
    /// Service index scaled on Fridays.
    pub friday_service: Option<usize>,
    pub friday_factor: f64,
    pub ramp_minutes: f64,
    pub plateau_minutes: f64,
    pub decay_minutes: f64,
    /// Integer jitter bound added to occupied samples.
    pub count_jitter: i64,
    /// Chance that an otherwise empty sample has 1 to 3 visitors.
    pub stray_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            days: 56,
            start: DEFAULT_START,
            step: 600,
            capacity: 500.0,
            service_minutes: vec![270.0, 720.0, 920.0, 1080.0, 1170.0],
            drift_minutes_per_day: 0.9,
            base_peak: 0.2,
            peak_jitter: 0.12,
            friday_service: Some(1),
            friday_factor: 4.0,
            ramp_minutes: 25.0,
            plateau_minutes: 20.0,
            decay_minutes: 5.0,
            count_jitter: 3,
            stray_probability: 0.004,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::input("days must be at least 1"));
        }
        if self.step <= 0 || SECONDS_PER_DAY % self.step != 0 {
            return Err(Error::input("step must divide one day"));
        }
        if self.start.rem_euclid(SECONDS_PER_DAY) != 0 {
            return Err(Error::input("start must be a UTC midnight"));
        }
        if !(self.capacity > 0.0) {
            return Err(Error::input("capacity must be positive"));
        }
        if self.service_minutes.is_empty()
            || self.service_minutes.windows(2).any(|w| w[1] <= w[0])
            || self.service_minutes.iter().any(|m| !(0.0..1440.0).contains(m))
        {
            return Err(Error::input("service times must be increasing minutes within a day"));
        }
        if !(0.0..1.0).contains(&self.peak_jitter) || !(0.0..=1.0).contains(&self.stray_probability) {
            return Err(Error::input("jitter and stray probability must lie in [0, 1)"));
        }
        if self.ramp_minutes <= 0.0 || self.plateau_minutes < 0.0 || self.decay_minutes <= 0.0 {
            return Err(Error::input("ramp and decay must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServicePeak {
    pub time: i64,
    pub service: usize,
    /// Crowd size before sample jitter.
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedOccupancy {
    pub occupancy: TimeSeries,
    pub events: Vec<CrossingEvent>,
    /// Service times, padded by a day on each side so every sample is
    /// bracketed.
    pub schedule: Vec<i64>,
    pub peaks: Vec<ServicePeak>,
}

fn profile(cfg: &GeneratorConfig, minutes_from_service: f64, peak: f64) -> f64 {
    let x = minutes_from_service;
    let (ramp, plateau, decay) = (cfg.ramp_minutes, cfg.plateau_minutes, cfg.decay_minutes);
    if (-ramp..=0.0).contains(&x) {
        peak * (x + ramp) / ramp
    } else if x > 0.0 && x <= plateau {
        peak
    } else if x > plateau && x <= plateau + decay {
        peak * (plateau + decay - x) / decay
    } else {
        0.0
    }
}

pub fn generate(cfg: &GeneratorConfig) -> Result<GeneratedOccupancy> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first_day = cfg.start / SECONDS_PER_DAY;
    let mut peaks = Vec::new();
    for d in (first_day - 1)..=(first_day + i64::from(cfg.days)) {
        let offset = (d - first_day) as f64 * cfg.drift_minutes_per_day;
        for (service, &base) in cfg.service_minutes.iter().enumerate() {
            let time = d * SECONDS_PER_DAY + ((base + offset) * 60.0).floor() as i64;
            let mut peak = cfg.base_peak * rng.gen_range(1.0 - cfg.peak_jitter..=1.0 + cfg.peak_jitter);
            if day_of_week(time) == FRIDAY && cfg.friday_service == Some(service) {
                peak *= cfg.friday_factor;
            }
            peaks.push(ServicePeak { time, service, peak: peak.min(1.0) * cfg.capacity });
        }
    }
    let schedule: Vec<i64> = peaks.iter().map(|p| p.time).collect();

    let n = (i64::from(cfg.days) * SECONDS_PER_DAY / cfg.step) as usize;
    let mut counts = Vec::with_capacity(n);
    for k in 0..n {
        let t = cfg.start + k as i64 * cfg.step;
        let crowd = peaks
            .iter()
            .map(|p| profile(cfg, (t - p.time) as f64 / 60.0, p.peak).round())
            .fold(0.0, f64::max) as i64;
        let count = if crowd == 0 {
            if rng.gen_bool(cfg.stray_probability) {
                rng.gen_range(1..=3)
            } else {
                0
            }
        } else {
            (crowd + rng.gen_range(-cfg.count_jitter..=cfg.count_jitter)).max(0)
        };
        counts.push(count);
    }

    let events = crossing_events(&counts, cfg.start, cfg.step, &mut rng);
    let occupancy = TimeSeries::new(cfg.start, cfg.step, counts.iter().map(|&c| c as f64).collect())?;
    Ok(GeneratedOccupancy { occupancy, events, schedule, peaks })
}

/// Crossings that move the count from each sample to the next inside the
/// preceding interval, plus a net-zero pass-through whenever an occupied
/// zone would otherwise look idle to the counter.
fn crossing_events(counts: &[i64], start: i64, step: i64, rng: &mut ChaCha8Rng) -> Vec<CrossingEvent> {
    let mut events = Vec::new();
    let mut previous = 0i64;
    let mut last_event = start - step;
    for (k, &count) in counts.iter().enumerate() {
        let t = start + k as i64 * step;
        let delta = count - previous;
        let direction = if delta > 0 { Direction::Inward } else { Direction::Outward };
        let mut groups = Vec::new();
        let mut left = delta.abs();
        while left > 0 {
            let g = rng.gen_range(1..=4).min(left);
            groups.push(g as u32);
            left -= g;
        }
        let m = groups.len() as i64;
        for (j, &g) in groups.iter().enumerate() {
            let timestamp = t - step + (j as i64 + 1) * step / (m + 1);
            events.push(CrossingEvent { timestamp, direction, count: g });
            last_event = timestamp;
        }
        if count > 0 && delta == 0 && t - last_event + step > DEFAULT_IDLE_TIMEOUT {
            events.push(CrossingEvent { timestamp: t, direction: Direction::Inward, count: 1 });
            events.push(CrossingEvent { timestamp: t, direction: Direction::Outward, count: 1 });
            last_event = t;
        }
        previous = count;
    }
    events
}

/// Daily outdoor or humidity cycle: cosine between `min` and `max` peaking at
/// `peak_hour` UTC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyCycle {
    pub min: f64,
    pub max: f64,
    pub peak_hour: f64,
}

impl DailyCycle {
    pub fn at(&self, t: i64) -> f64 {
        let hour = t.rem_euclid(SECONDS_PER_DAY) as f64 / 3600.0;
        let phase = 2.0 * std::f64::consts::PI * (hour - self.peak_hour) / 24.0;
        let mid = 0.5 * (self.min + self.max);
        let amp = 0.5 * (self.max - self.min);
        mid + amp * phase.cos()
    }

    pub fn series(&self, start: i64, step: i64, len: usize) -> Result<TimeSeries> {
        Ok(TimeSeries::new(start, step, (0..len).map(|k| self.at(start + k as i64 * step)).collect())?)
    }
}

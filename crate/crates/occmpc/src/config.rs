//! JSON scenario configuration.

use std::path::{Path, PathBuf};

use occmpc_core::calibration::CalibrationSpace;
use occmpc_core::closed_loop::ControllerKind;
use occmpc_core::comfort::ComfortAssumptions;
use occmpc_core::forecast::{Recipe, DEFAULT_ONSET_THRESHOLD, DEFAULT_WINDOW_MINUTES};
use occmpc_core::mpc::{SetpointPolicy, DEFAULT_ONSET_GRACE};
use occmpc_core::strategy::PenaltyWeights;
use occmpc_core::{StepMethod, ZoneThermalParams};
use serde::{Deserialize, Serialize};

use crate::generator::{DailyCycle, GeneratorConfig, DEFAULT_START};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalSource {
    Cycle(DailyCycle),
    /// `timestamp,value` CSV.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OccupancySource {
    /// Synthetic; the generator's start and length follow the scenario.
    Generator(GeneratorConfig),
    /// `timestamp,value` CSV of head counts.
    Trace { path: PathBuf, capacity: f64 },
    /// `timestamp,direction,count` CSV replayed through the counter.
    Events { path: PathBuf, capacity: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFiles {
    /// `timestamp` CSV of service times.
    pub events: PathBuf,
    /// `date` CSV.
    #[serde(default)]
    pub holidays: Option<PathBuf>,
    #[serde(default)]
    pub special_days: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    InProcess,
    Socket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastSettings {
    pub recipe: Recipe,
    pub threshold: f64,
    pub window_minutes: f64,
    pub training_days: u32,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        Self {
            recipe: Recipe::DomainPoly,
            threshold: DEFAULT_ONSET_THRESHOLD,
            window_minutes: DEFAULT_WINDOW_MINUTES,
            training_days: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub params: ZoneThermalParams,
    pub policy: SetpointPolicy,
    pub weights: PenaltyWeights,
    pub comfort: ComfortAssumptions,
    pub method: StepMethod,
    /// Midnight UTC where history begins.
    pub start: i64,
    pub step: i64,
    /// History kept for forecaster training ahead of the controlled period.
    pub history_days: u32,
    /// Controlled period.
    pub days: u32,
    pub initial_temp: f64,
    pub weather: SignalSource,
    pub humidity: SignalSource,
    pub occupancy: OccupancySource,
    /// Required unless occupancy comes from the generator.
    pub schedule: Option<ScheduleFiles>,
    pub forecast: ForecastSettings,
    pub controller: ControllerKind,
    pub transport: Transport,
    pub onset_grace_s: i64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl ScenarioConfig {
    /// Seven controlled days in a hot climate after thirty days of history.
    pub fn reference() -> Self {
        Self {
            params: ZoneThermalParams {
                heat_capacity: 6.5e7,
                thermal_resistance: 2.0e-4,
                hvac_max_cooling: 135_000.0,
                cop: 3.0,
                occupant_heat: 100.0,
                deadband: 0.25,
            },
            policy: SetpointPolicy::default(),
            weights: PenaltyWeights::default(),
            comfort: ComfortAssumptions::default(),
            method: StepMethod::Euler,
            start: DEFAULT_START,
            step: 300,
            history_days: 30,
            days: 7,
            initial_temp: 28.0,
            weather: SignalSource::Cycle(DailyCycle { min: 28.0, max: 42.0, peak_hour: 15.0 }),
            humidity: SignalSource::Cycle(DailyCycle { min: 30.0, max: 70.0, peak_hour: 4.0 }),
            occupancy: OccupancySource::Generator(GeneratorConfig { seed: 7, ..GeneratorConfig::default() }),
            schedule: None,
            forecast: ForecastSettings::default(),
            controller: ControllerKind::HvacMpc,
            transport: Transport::InProcess,
            onset_grace_s: DEFAULT_ONSET_GRACE,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::File { path: path.display().to_string(), source })?;
        let mut config: Self = serde_json::from_str(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    /// Makes relative file paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for source in [&mut self.weather, &mut self.humidity] {
            if let SignalSource::Csv { path } = source {
                fix(path);
            }
        }
        match &mut self.occupancy {
            OccupancySource::Trace { path, .. } | OccupancySource::Events { path, .. } => fix(path),
            OccupancySource::Generator(_) => {}
        }
        if let Some(s) = &mut self.schedule {
            fix(&mut s.events);
            s.holidays.iter_mut().for_each(fix);
            s.special_days.iter_mut().for_each(fix);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.policy.validate()?;
        self.weights.validate()?;
        if self.step <= 0 || 86_400 % self.step != 0 {
            return Err(Error::input("step must divide one day"));
        }
        if self.days == 0 {
            return Err(Error::input("days must be at least 1"));
        }
        if self.start.rem_euclid(86_400) != 0 {
            return Err(Error::input("start must be a UTC midnight"));
        }
        if !matches!(self.occupancy, OccupancySource::Generator(_)) && self.schedule.is_none() {
            return Err(Error::input("a schedule is required for recorded occupancy"));
        }
        if !(0.0..=1.0).contains(&self.forecast.threshold) {
            return Err(Error::input("forecast threshold must lie in [0, 1]"));
        }
        Ok(())
    }

    /// First controlled instant.
    pub fn run_start(&self) -> i64 {
        self.start + i64::from(self.history_days) * 86_400
    }

    pub fn run_steps(&self) -> usize {
        (i64::from(self.days) * 86_400 / self.step) as usize
    }
}

/// Inputs of the `calibrate` command. Trace paths are `timestamp,value` CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub base_params: ZoneThermalParams,
    pub initial_temp: f64,
    pub weather: PathBuf,
    pub occupancy: PathBuf,
    /// Compressor duty in `[0, 1]` per step.
    pub hvac_duty: PathBuf,
    #[serde(default)]
    pub method: StepMethod,
    pub space: CalibrationSpace,
}

impl CalibrationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::File { path: path.display().to_string(), source })?;
        let mut config: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.weather, &mut config.occupancy, &mut config.hvac_duty] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.base_params.validate()?;
        config.space.validate()?;
        Ok(config)
    }
}

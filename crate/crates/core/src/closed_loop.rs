//! Lock-step controller/plant loop.
//!
//! The loop only talks to the zone through [`Plant`], so the same run can
//! be driven in-process or across a process boundary.

use alloc::vec::Vec;

use crate::comfort::{assess, ComfortAssumptions};
use crate::mpc::{
    controller_tick, ControllerConfig, ControllerState, Decision, Observation,
    OccupancyForecaster,
};
use crate::thermal::{step, thermostat_actuation, SimulationState, StepMethod, ZoneThermalParams};
use crate::{Error, Result, TimeSeries};

/// Inputs the plant needs for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepInput {
    pub setpoint: f64,
    pub outdoor: f64,
    pub humidity: f64,
    pub occupants: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantReply {
    /// Indoor temperature at the end of the step, °C.
    pub indoor_temp: f64,
    pub step_energy_wh: f64,
    pub hvac_on: bool,
}

pub trait Plant {
    type Error: From<Error>;

    /// Advances the zone by one step; `index` counts steps from zero.
    fn step(&mut self, index: u64, input: &StepInput) -> core::result::Result<PlantReply, Self::Error>;
}

/// Thermostat plus RC zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePlant {
    params: ZoneThermalParams,
    method: StepMethod,
    dt: f64,
    state: SimulationState,
}

impl ZonePlant {
    pub fn new(params: ZoneThermalParams, initial_temp: f64, dt: f64, method: StepMethod) -> Result<Self> {
        params.validate()?;
        if !initial_temp.is_finite() {
            return Err(Error::NonFinite("initial temperature"));
        }
        Ok(Self { params, method, dt, state: SimulationState::new(initial_temp) })
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn params(&self) -> &ZoneThermalParams {
        &self.params
    }
}

impl Plant for ZonePlant {
    type Error = Error;

    fn step(&mut self, index: u64, input: &StepInput) -> Result<PlantReply> {
        if index != self.state.clock {
            return Err(Error::OutOfOrder { previous: self.state.clock as i64, found: index as i64 });
        }
        if !input.setpoint.is_finite() {
            return Err(Error::NonFinite("setpoint"));
        }
        let (q_ac, _) = thermostat_actuation(input.setpoint, &self.params, &self.state);
        let next = step(
            self.method,
            &self.state,
            &self.params,
            input.outdoor,
            input.occupants,
            q_ac,
            self.dt,
        )?;
        let reply = PlantReply {
            indoor_temp: next.indoor_temp,
            step_energy_wh: next.cumulative_energy - self.state.cumulative_energy,
            hvac_on: next.hvac_on,
        };
        self.state = next;
        Ok(reply)
    }
}

/// Measured and predicted inputs for a run, all on one clock.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopInputs {
    pub weather: TimeSeries,
    pub humidity: TimeSeries,
    pub occupancy: TimeSeries,
}

impl ClosedLoopInputs {
    pub fn validate(&self) -> Result<()> {
        self.weather.ensure_aligned(&self.humidity)?;
        self.weather.ensure_aligned(&self.occupancy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ControllerKind {
    /// Occupied setpoint around the clock.
    Baseline,
    HvacMpc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub setpoints: Vec<f64>,
    /// Indoor temperature at the end of each step.
    pub indoor: Vec<f64>,
    /// Heat flow applied in each step, W.
    pub hvac: Vec<f64>,
    pub step_energy_wh: Vec<f64>,
    pub decisions: Vec<Decision>,
}

impl ClosedLoopRun {
    pub fn total_energy_wh(&self) -> f64 {
        self.step_energy_wh.iter().sum()
    }
}

pub fn run_closed_loop<P: Plant>(
    plant: &mut P,
    initial_temp: f64,
    inputs: &ClosedLoopInputs,
    kind: ControllerKind,
    config: &ControllerConfig,
    forecaster: &dyn OccupancyForecaster,
) -> core::result::Result<ClosedLoopRun, P::Error> {
    inputs.validate()?;
    if inputs.weather.step() != config.dt {
        return Err(Error::ClockMismatch.into());
    }
    let n = inputs.weather.len();
    let mut run = ClosedLoopRun {
        setpoints: Vec::with_capacity(n),
        indoor: Vec::with_capacity(n),
        hvac: Vec::with_capacity(n),
        step_energy_wh: Vec::with_capacity(n),
        decisions: Vec::new(),
    };
    let mut controller = ControllerState::new(&config.policy);
    let mut indoor = initial_temp;
    for i in 0..n {
        let input = StepInput {
            setpoint: config.policy.setpoint_oc,
            outdoor: inputs.weather.values()[i],
            humidity: inputs.humidity.values()[i],
            occupants: inputs.occupancy.values()[i],
        };
        let setpoint = match kind {
            ControllerKind::Baseline => config.policy.setpoint_oc,
            ControllerKind::HvacMpc => {
                let obs = Observation {
                    time: inputs.weather.time_at(i),
                    occupants: input.occupants,
                    indoor_temp: indoor,
                    outdoor_temp: input.outdoor,
                };
                let out = controller_tick(&controller, &obs, forecaster, config)?;
                controller = out.state;
                run.decisions.extend(out.decisions);
                out.setpoint
            }
        };
        let reply = plant.step(i as u64, &StepInput { setpoint, ..input })?;
        indoor = reply.indoor_temp;
        run.setpoints.push(setpoint);
        run.indoor.push(reply.indoor_temp);
        run.hvac.push(if reply.hvac_on { -config.params.hvac_max_cooling } else { 0.0 });
        run.step_energy_wh.push(reply.step_energy_wh);
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComfortStats {
    pub occupied_steps: usize,
    pub comfortable_steps: usize,
    /// Share of occupied steps with |PMV| <= 0.5; `None` when never occupied.
    pub comfortable_fraction: Option<f64>,
    pub mean_ppd: Option<f64>,
}

/// Comfort over occupied steps, judged on the end-of-step temperature.
pub fn comfort_stats(
    indoor: &[f64],
    humidity: &[f64],
    occupancy: &[f64],
    assumptions: &ComfortAssumptions,
) -> Result<ComfortStats> {
    if indoor.len() != humidity.len() || indoor.len() != occupancy.len() {
        return Err(Error::Misaligned { expected: indoor.len(), found: humidity.len().min(occupancy.len()) });
    }
    let (mut occupied, mut comfortable, mut ppd_sum) = (0usize, 0usize, 0.0);
    for ((&t, &rh), &o) in indoor.iter().zip(humidity).zip(occupancy) {
        if o > 0.0 {
            let a = assess(&assumptions.at(t, rh))?;
            occupied += 1;
            comfortable += a.within_band as usize;
            ppd_sum += a.ppd;
        }
    }
    let share = |x: f64| (occupied > 0).then(|| x / occupied as f64);
    Ok(ComfortStats {
        occupied_steps: occupied,
        comfortable_steps: comfortable,
        comfortable_fraction: share(comfortable as f64),
        mean_ppd: share(ppd_sum),
    })
}

//! Single-zone lumped RC thermal model.
//!
//! The zone is one capacitor (`heat_capacity`, J/°C) coupled to outdoor air
//! through one resistor (`thermal_resistance`, °C/W), driven by a cooling-only
//! HVAC plant and by occupant heat:
//!
//! ```text
//! C dT/dt = (T_o - T)/R + Q_ac + q_person * O
//! ```
//!
//! With inputs held constant over a step the zone relaxes exponentially
//! toward the equilibrium `T_eq = T_o + R (Q_ac + q_person O)` with time
//! constant `R C`. [`step_euler`] is the forward-Euler discretisation used by
//! every controller; [`step_exact`] is the closed-form step used to check it.

use alloc::vec::Vec;

use crate::{Error, Result, TimeSeries};

/// Default simulator step (10 minutes).
pub const DEFAULT_DT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZoneThermalParams {
    /// Zone heat capacity, J/°C.
    pub heat_capacity: f64,
    /// Envelope thermal resistance, °C/W.
    pub thermal_resistance: f64,
    /// Cooling capacity magnitude, W.
    pub hvac_max_cooling: f64,
    /// Coefficient of performance (thermal W per electrical W).
    pub cop: f64,
    /// Heat emitted per occupant, W.
    pub occupant_heat: f64,
    /// Thermostat half-band, °C.
    pub deadband: f64,
}

impl Default for ZoneThermalParams {
    fn default() -> Self {
        Self {
            heat_capacity: 1.0e7,
            thermal_resistance: 0.002,
            hvac_max_cooling: 50_000.0,
            cop: 3.0,
            occupant_heat: 100.0,
            deadband: 0.5,
        }
    }
}

impl ZoneThermalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("heat_capacity", self.heat_capacity),
            ("thermal_resistance", self.thermal_resistance),
            ("hvac_max_cooling", self.hvac_max_cooling),
            ("cop", self.cop),
            ("occupant_heat", self.occupant_heat),
            ("deadband", self.deadband),
        ];
        for (what, value) in fields {
            if !value.is_finite() {
                return Err(Error::NonFinite(what));
            }
        }
        let positive = [
            ("heat_capacity", self.heat_capacity),
            ("thermal_resistance", self.thermal_resistance),
            ("cop", self.cop),
        ];
        for (what, value) in positive {
            if value <= 0.0 {
                return Err(Error::OutOfRange { what, value });
            }
        }
        let non_negative = [
            ("hvac_max_cooling", self.hvac_max_cooling),
            ("occupant_heat", self.occupant_heat),
            ("deadband", self.deadband),
        ];
        for (what, value) in non_negative {
            if value < 0.0 {
                return Err(Error::OutOfRange { what, value });
            }
        }
        let tau = self.time_constant();
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::OutOfRange { what: "time constant", value: tau });
        }
        Ok(())
    }

    /// `R C`, seconds.
    pub fn time_constant(&self) -> f64 {
        self.thermal_resistance * self.heat_capacity
    }

    /// Largest step for which forward Euler stays stable (exclusive).
    pub fn euler_step_limit(&self) -> f64 {
        2.0 * self.time_constant()
    }

    /// Electrical energy (Wh) drawn to deliver `q_ac` for `dt` seconds.
    pub fn electrical_energy_wh(&self, q_ac: f64, dt: f64) -> f64 {
        libm::fabs(q_ac) * dt / (3600.0 * self.cop)
    }

    /// Temperature the zone relaxes to under constant inputs.
    pub fn equilibrium(&self, outdoor: f64, occupants: f64, q_ac: f64) -> f64 {
        outdoor + self.thermal_resistance * (q_ac + occupant_heat_gain(occupants, self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationState {
    /// Indoor air temperature, °C.
    pub indoor_temp: f64,
    /// Electrical energy drawn so far, Wh.
    pub cumulative_energy: f64,
    /// Number of steps taken.
    pub clock: u64,
    pub hvac_on: bool,
}

impl SimulationState {
    pub fn new(indoor_temp: f64) -> Self {
        Self { indoor_temp, cumulative_energy: 0.0, clock: 0, hvac_on: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StepMethod {
    #[default]
    Euler,
    Exact,
}

/// Heat emitted by `occupants` people, W.
pub fn occupant_heat_gain(occupants: f64, params: &ZoneThermalParams) -> f64 {
    params.occupant_heat * occupants
}

fn check_step_inputs(
    state: &SimulationState,
    params: &ZoneThermalParams,
    outdoor: f64,
    occupants: f64,
    q_ac: f64,
    dt: f64,
) -> Result<()> {
    params.validate()?;
    for (what, v) in [
        ("indoor temperature", state.indoor_temp),
        ("outdoor temperature", outdoor),
        ("occupants", occupants),
        ("hvac heat flow", q_ac),
        ("time step", dt),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(what));
        }
    }
    if dt <= 0.0 {
        return Err(Error::OutOfRange { what: "time step", value: dt });
    }
    if occupants < 0.0 {
        return Err(Error::OutOfRange { what: "occupants", value: occupants });
    }
    if q_ac > 0.0 {
        return Err(Error::HeatingRequested(q_ac));
    }
    if -q_ac > params.hvac_max_cooling {
        return Err(Error::OutOfRange { what: "hvac heat flow", value: q_ac });
    }
    Ok(())
}

fn advance(
    state: &SimulationState,
    params: &ZoneThermalParams,
    indoor_temp: f64,
    q_ac: f64,
    dt: f64,
) -> SimulationState {
    SimulationState {
        indoor_temp,
        cumulative_energy: state.cumulative_energy + params.electrical_energy_wh(q_ac, dt),
        clock: state.clock + 1,
        hvac_on: q_ac < 0.0,
    }
}

/// One explicit Euler step of `dt` seconds, inputs evaluated on the pre-step state.
pub fn step_euler(
    state: &SimulationState,
    params: &ZoneThermalParams,
    outdoor: f64,
    occupants: f64,
    q_ac: f64,
    dt: f64,
) -> Result<SimulationState> {
    check_step_inputs(state, params, outdoor, occupants, q_ac, dt)?;
    let limit = params.euler_step_limit();
    if dt >= limit {
        return Err(Error::UnstableStep { dt, limit });
    }
    // (T_o - T)/R + Q_ac + Q(O) == (T_eq - T)/R, written so that T == T_eq is an exact fixed point.
    let t_eq = params.equilibrium(outdoor, occupants, q_ac);
    let t = state.indoor_temp;
    let next = t + dt / params.time_constant() * (t_eq - t);
    Ok(advance(state, params, next, q_ac, dt))
}

/// One closed-form step under inputs held constant for `dt` seconds.
pub fn step_exact(
    state: &SimulationState,
    params: &ZoneThermalParams,
    outdoor: f64,
    occupants: f64,
    q_ac: f64,
    dt: f64,
) -> Result<SimulationState> {
    check_step_inputs(state, params, outdoor, occupants, q_ac, dt)?;
    let t_eq = params.equilibrium(outdoor, occupants, q_ac);
    let decay = libm::exp(-dt / params.time_constant());
    let next = t_eq + (state.indoor_temp - t_eq) * decay;
    Ok(advance(state, params, next, q_ac, dt))
}

pub fn step(
    method: StepMethod,
    state: &SimulationState,
    params: &ZoneThermalParams,
    outdoor: f64,
    occupants: f64,
    q_ac: f64,
    dt: f64,
) -> Result<SimulationState> {
    match method {
        StepMethod::Euler => step_euler(state, params, outdoor, occupants, q_ac, dt),
        StepMethod::Exact => step_exact(state, params, outdoor, occupants, q_ac, dt),
    }
}

/// Result of an open-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    /// Indoor temperature at the end of each step.
    pub indoor: TimeSeries,
    /// Electrical energy over the whole run, Wh.
    pub energy_wh: f64,
    pub final_state: SimulationState,
}

/// Open-loop simulation; sample `i` of the output is the temperature after step `i`.
pub fn simulate(
    params: &ZoneThermalParams,
    initial_temp: f64,
    weather: &TimeSeries,
    occupancy: &TimeSeries,
    hvac_plan: &TimeSeries,
    method: StepMethod,
) -> Result<SimulationOutput> {
    weather.ensure_aligned(occupancy)?;
    weather.ensure_aligned(hvac_plan)?;
    let dt = weather.step() as f64;
    let mut state = SimulationState::new(initial_temp);
    let mut indoor = Vec::with_capacity(weather.len());
    for ((&outdoor, &occupants), &q_ac) in weather
        .values()
        .iter()
        .zip(occupancy.values())
        .zip(hvac_plan.values())
    {
        state = step(method, &state, params, outdoor, occupants, q_ac, dt)?;
        indoor.push(state.indoor_temp);
    }
    Ok(SimulationOutput {
        indoor: weather.with_values(indoor)?,
        energy_wh: state.cumulative_energy,
        final_state: state,
    })
}

/// Cooling-only on/off thermostat with hysteresis.
///
/// Returns the heat flow to apply this step and the new compressor state.
pub fn thermostat_actuation(
    setpoint: f64,
    params: &ZoneThermalParams,
    state: &SimulationState,
) -> (f64, bool) {
    let on = if state.indoor_temp > setpoint + params.deadband {
        true
    } else if state.indoor_temp < setpoint - params.deadband {
        false
    } else {
        state.hvac_on
    };
    let q_ac = if on { -params.hvac_max_cooling } else { 0.0 };
    (q_ac, on)
}

/// Closed-loop run driven by a setpoint schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermostatRun {
    pub indoor: TimeSeries,
    /// Heat flow applied at each step, W.
    pub hvac: TimeSeries,
    pub energy_wh: f64,
}

pub fn simulate_thermostat(
    params: &ZoneThermalParams,
    initial_temp: f64,
    weather: &TimeSeries,
    occupancy: &TimeSeries,
    setpoints: &TimeSeries,
    method: StepMethod,
) -> Result<ThermostatRun> {
    weather.ensure_aligned(occupancy)?;
    weather.ensure_aligned(setpoints)?;
    let dt = weather.step() as f64;
    let mut state = SimulationState::new(initial_temp);
    let mut indoor = Vec::with_capacity(weather.len());
    let mut hvac = Vec::with_capacity(weather.len());
    for i in 0..weather.len() {
        let (q_ac, _) = thermostat_actuation(setpoints.values()[i], params, &state);
        state = step(method, &state, params, weather.values()[i], occupancy.values()[i], q_ac, dt)?;
        indoor.push(state.indoor_temp);
        hvac.push(q_ac);
    }
    Ok(ThermostatRun {
        indoor: weather.with_values(indoor)?,
        hvac: weather.with_values(hvac)?,
        energy_wh: state.cumulative_energy,
    })
}

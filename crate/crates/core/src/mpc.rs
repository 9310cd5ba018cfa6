//! Occupancy-triggered setpoint control with bisection pre-cooling.
//!
//! The controller keeps the zone at the unoccupied setpoint while it is
//! empty and switches to the occupied setpoint at the latest start time that
//! still cools the zone down before the next predicted arrival.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::thermal::{step, SimulationState, StepMethod, ZoneThermalParams};
use crate::{Error, Result, TimeSeries};

/// Default hold on the occupied setpoint after a predicted onset that did
/// not materialise.
pub const DEFAULT_ONSET_GRACE: i64 = 30 * 60;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SetpointPolicy {
    pub setpoint_oc: f64,
    pub setpoint_uo: f64,
}

impl Default for SetpointPolicy {
    fn default() -> Self {
        Self { setpoint_oc: 24.0, setpoint_uo: 28.0 }
    }
}

impl SetpointPolicy {
    pub fn validate(&self) -> Result<()> {
        if !self.setpoint_oc.is_finite() || !self.setpoint_uo.is_finite() {
            return Err(Error::NonFinite("setpoint"));
        }
        if self.setpoint_oc >= self.setpoint_uo {
            return Err(Error::Invalid("occupied setpoint must be below the unoccupied setpoint"));
        }
        Ok(())
    }
}

/// Result of a pre-cooling search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecoolPlan {
    /// Time at which cooling must start.
    pub start: i64,
    /// Zone simulations spent by the search.
    pub simulations: u32,
}

/// Temperature at the end of `outdoor.len()` steps when the compressor is
/// off for the first `start_step` steps and at full capacity afterwards.
/// The zone is assumed empty throughout.
pub fn precool_terminal_temp(
    params: &ZoneThermalParams,
    indoor_temp: f64,
    outdoor: &[f64],
    start_step: usize,
    dt: f64,
    method: StepMethod,
) -> Result<f64> {
    let mut state = SimulationState::new(indoor_temp);
    for (k, &t_o) in outdoor.iter().enumerate() {
        let q_ac = if k < start_step { 0.0 } else { -params.hvac_max_cooling };
        state = step(method, &state, params, t_o, 0.0, q_ac, dt)?;
    }
    Ok(state.indoor_temp)
}

/// Latest start time in `[t_now, t_pd_oc]` from which full cooling brings
/// the zone to `setpoint_oc` by `t_pd_oc`.
///
/// `weather` is the outdoor forecast; it must start at `t_now` and cover the
/// horizon. If no start time is early enough, `t_now` is returned.
pub fn precool_start(
    t_now: i64,
    t_pd_oc: i64,
    indoor_temp: f64,
    params: &ZoneThermalParams,
    weather: &TimeSeries,
    policy: &SetpointPolicy,
    method: StepMethod,
) -> Result<PrecoolPlan> {
    policy.validate()?;
    if t_pd_oc <= t_now {
        return Err(Error::Empty("pre-cooling horizon"));
    }
    if weather.start() != t_now {
        return Err(Error::ClockMismatch);
    }
    let dt = weather.step();
    let span = t_pd_oc - t_now;
    if span % dt != 0 {
        return Err(Error::Invalid("arrival time is not on the weather clock"));
    }
    let n = (span / dt) as usize;
    if weather.len() < n {
        return Err(Error::Misaligned { expected: n, found: weather.len() });
    }
    let outdoor = &weather.values()[..n];
    let mut simulations = 0u32;
    let mut feasible = |s: usize| -> Result<bool> {
        simulations += 1;
        let t = precool_terminal_temp(params, indoor_temp, outdoor, s, dt as f64, method)?;
        Ok(t <= policy.setpoint_oc)
    };
    // feasibility is monotone in the start step: largest feasible s in [0, n]
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(PrecoolPlan { start: t_now + lo as i64 * dt, simulations })
}

/// Source of predicted arrivals.
pub trait OccupancyForecaster {
    /// First predicted occupied time strictly after `t_now`, if any within the
    /// forecast horizon.
    fn next_occupied(&self, t_now: i64) -> Option<i64>;
}

impl<F: Fn(i64) -> Option<i64>> OccupancyForecaster for F {
    fn next_occupied(&self, t_now: i64) -> Option<i64> {
        self(t_now)
    }
}

/// Outdoor temperature assumed by the pre-cooling search.
#[derive(Debug, Clone, PartialEq)]
pub enum WeatherForecast {
    /// Hold the latest observed outdoor temperature.
    Persistence,
    /// Read the given trace (used with true weather in tests).
    Trace(TimeSeries),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub params: ZoneThermalParams,
    pub policy: SetpointPolicy,
    /// Control period, seconds.
    pub dt: i64,
    pub onset_grace: i64,
    pub method: StepMethod,
    pub weather: WeatherForecast,
}

impl ControllerConfig {
    pub fn new(params: ZoneThermalParams, policy: SetpointPolicy, dt: i64) -> Self {
        Self {
            params,
            policy,
            dt,
            onset_grace: DEFAULT_ONSET_GRACE,
            method: StepMethod::Euler,
            weather: WeatherForecast::Persistence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControllerState {
    /// Absolute pre-cooling start time, when one is pending.
    pub timer: Option<i64>,
    pub target: f64,
    /// Predicted arrival being prepared for.
    pub arrival: Option<i64>,
}

impl ControllerState {
    pub fn new(policy: &SetpointPolicy) -> Self {
        Self { timer: None, target: policy.setpoint_uo, arrival: None }
    }
}

/// What the controller sees at the start of a control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: i64,
    pub occupants: f64,
    pub indoor_temp: f64,
    pub outdoor_temp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecisionKind {
    Occupied,
    Vacant,
    PrecoolScheduled { start: i64, arrival: i64, simulations: u32 },
    NoArrivalForecast,
    PrecoolStarted,
    OnsetMissed { arrival: i64 },
}

impl DecisionKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Occupied => "occupied",
            Self::Vacant => "vacant",
            Self::PrecoolScheduled { .. } => "precool_scheduled",
            Self::NoArrivalForecast => "no_arrival_forecast",
            Self::PrecoolStarted => "precool_started",
            Self::OnsetMissed { .. } => "onset_missed",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Self::PrecoolScheduled { start, arrival, simulations } => {
                format!("start={start} arrival={arrival} simulations={simulations}")
            }
            Self::OnsetMissed { arrival } => format!("arrival={arrival}"),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub time: i64,
    pub kind: DecisionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub state: ControllerState,
    pub setpoint: f64,
    pub decisions: Vec<Decision>,
}

/// One control period: returns the setpoint to hold until the next tick.
pub fn controller_tick(
    state: &ControllerState,
    obs: &Observation,
    forecaster: &dyn OccupancyForecaster,
    config: &ControllerConfig,
) -> Result<TickOutput> {
    let policy = &config.policy;
    policy.validate()?;
    let now = obs.time;
    let mut next = *state;
    let mut decisions = Vec::new();
    let mut log = |kind| decisions.push(Decision { time: now, kind });

    if obs.occupants > 0.0 {
        if next.target != policy.setpoint_oc || next.timer.is_some() {
            log(DecisionKind::Occupied);
        }
        next = ControllerState { timer: None, target: policy.setpoint_oc, arrival: None };
        return Ok(TickOutput { state: next, setpoint: next.target, decisions });
    }

    if next.timer.is_none() {
        if let Some(arrival) = next.arrival {
            if now < arrival + config.onset_grace {
                next.target = policy.setpoint_oc;
                return Ok(TickOutput { state: next, setpoint: next.target, decisions });
            }
            log(DecisionKind::OnsetMissed { arrival });
            next.arrival = None;
        }
    }

    match next.timer {
        Some(start) if start <= now => {
            next.timer = None;
            next.target = policy.setpoint_oc;
            log(DecisionKind::PrecoolStarted);
        }
        Some(_) => {}
        None => {
            if next.target != policy.setpoint_uo {
                log(DecisionKind::Vacant);
            }
            next.target = policy.setpoint_uo;
            match forecaster.next_occupied(now).filter(|&t| t > now) {
                None => log(DecisionKind::NoArrivalForecast),
                Some(predicted) => {
                    let n = ((predicted - now + config.dt - 1) / config.dt) as usize;
                    let arrival = now + n as i64 * config.dt;
                    let weather = match &config.weather {
                        WeatherForecast::Persistence => {
                            TimeSeries::constant(now, config.dt, n, obs.outdoor_temp)?
                        }
                        WeatherForecast::Trace(trace) => {
                            let from = trace.index_of(now).ok_or(Error::OutsideSchedule(now))?;
                            let mut values: Vec<f64> =
                                trace.values()[from..(from + n).min(trace.len())].to_vec();
                            let last = values[values.len() - 1];
                            values.resize(n, last);
                            TimeSeries::new(now, config.dt, values)?
                        }
                    };
                    let plan = precool_start(
                        now,
                        arrival,
                        obs.indoor_temp,
                        &config.params,
                        &weather,
                        policy,
                        config.method,
                    )?;
                    log(DecisionKind::PrecoolScheduled {
                        start: plan.start,
                        arrival,
                        simulations: plan.simulations,
                    });
                    next.arrival = Some(arrival);
                    if plan.start <= now {
                        next.target = policy.setpoint_oc;
                        log(DecisionKind::PrecoolStarted);
                    } else {
                        next.timer = Some(plan.start);
                    }
                }
            }
        }
    }
    Ok(TickOutput { state: next, setpoint: next.target, decisions })
}

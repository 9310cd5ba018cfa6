//! Inverse calibration of zone parameters against a measured indoor trace.
//!
//! Each round sweeps every parameter over a fixed candidate grid while the
//! others stay at their incumbent values, then commits all per-parameter
//! minimisers together and re-checks CVRMSE against the threshold.

use alloc::vec::Vec;

use crate::thermal::{simulate, StepMethod, ZoneThermalParams};
use crate::{Error, Result, TimeSeries};

pub const DEFAULT_THRESHOLD: f64 = 0.02;
pub const DEFAULT_CANDIDATES: usize = 11;
pub const DEFAULT_MAX_ROUNDS: usize = 20;

/// Coefficient of variation of the RMSE, as a fraction of the measured mean.
pub fn cvrmse(measured: &TimeSeries, simulated: &TimeSeries) -> Result<f64> {
    let (sum_measured, residuals) = residuals(measured, simulated)?;
    let m = measured.len() as f64;
    let mean = sum_measured / m;
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(libm::sqrt(sse / m) / mean)
}

/// Mean bias error: signed residual sum over the measured sum.
pub fn mbe(measured: &TimeSeries, simulated: &TimeSeries) -> Result<f64> {
    let (sum_measured, residuals) = residuals(measured, simulated)?;
    Ok(residuals.iter().sum::<f64>() / sum_measured)
}

fn residuals(measured: &TimeSeries, simulated: &TimeSeries) -> Result<(f64, Vec<f64>)> {
    if measured.len() != simulated.len() {
        return Err(Error::Misaligned { expected: measured.len(), found: simulated.len() });
    }
    let sum: f64 = measured.values().iter().sum();
    if sum == 0.0 {
        return Err(Error::ZeroDenominator("measured mean"));
    }
    let r = measured
        .values()
        .iter()
        .zip(simulated.values())
        .map(|(m, s)| m - s)
        .collect();
    Ok((sum, r))
}

/// Zone parameters that can be calibrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ZoneParameter {
    HeatCapacity,
    ThermalResistance,
    HvacMaxCooling,
    Cop,
    OccupantHeat,
}

impl ZoneParameter {
    pub fn name(self) -> &'static str {
        match self {
            ZoneParameter::HeatCapacity => "heat_capacity",
            ZoneParameter::ThermalResistance => "thermal_resistance",
            ZoneParameter::HvacMaxCooling => "hvac_max_cooling",
            ZoneParameter::Cop => "cop",
            ZoneParameter::OccupantHeat => "occupant_heat",
        }
    }

    pub fn get(self, p: &ZoneThermalParams) -> f64 {
        match self {
            ZoneParameter::HeatCapacity => p.heat_capacity,
            ZoneParameter::ThermalResistance => p.thermal_resistance,
            ZoneParameter::HvacMaxCooling => p.hvac_max_cooling,
            ZoneParameter::Cop => p.cop,
            ZoneParameter::OccupantHeat => p.occupant_heat,
        }
    }

    pub fn set(self, p: &mut ZoneThermalParams, value: f64) {
        match self {
            ZoneParameter::HeatCapacity => p.heat_capacity = value,
            ZoneParameter::ThermalResistance => p.thermal_resistance = value,
            ZoneParameter::HvacMaxCooling => p.hvac_max_cooling = value,
            ZoneParameter::Cop => p.cop = value,
            ZoneParameter::OccupantHeat => p.occupant_heat = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterRange {
    pub parameter: ZoneParameter,
    pub lower: f64,
    pub upper: f64,
    /// Incumbent value; must lie within the bounds.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationSpace {
    pub parameters: Vec<ParameterRange>,
    pub candidates_per_sweep: usize,
    pub threshold: f64,
    pub max_rounds: usize,
}

impl CalibrationSpace {
    pub fn new(parameters: Vec<ParameterRange>) -> Self {
        Self {
            parameters,
            candidates_per_sweep: DEFAULT_CANDIDATES,
            threshold: DEFAULT_THRESHOLD,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(Error::Empty("calibration space"));
        }
        if self.candidates_per_sweep < 2 {
            return Err(Error::Invalid("candidates_per_sweep (need >= 2)"));
        }
        // threshold is a fraction; 1.0 is accepted as the vacuous "always calibrated" value
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::OutOfRange { what: "threshold", value: self.threshold });
        }
        if self.max_rounds == 0 {
            return Err(Error::Invalid("max_rounds (need >= 1)"));
        }
        for r in &self.parameters {
            if !(r.lower.is_finite() && r.upper.is_finite() && r.value.is_finite()) {
                return Err(Error::NonFinite("parameter bound"));
            }
            if r.lower >= r.upper {
                return Err(Error::Invalid("parameter bounds (lower must be < upper)"));
            }
            if r.value < r.lower || r.value > r.upper {
                return Err(Error::OutOfRange { what: "incumbent parameter", value: r.value });
            }
        }
        Ok(())
    }

    /// Uniform grid over the bounds of parameter `k`, plus the incumbent when it is off-grid.
    pub fn candidates(&self, k: usize) -> Vec<f64> {
        let r = &self.parameters[k];
        let n = self.candidates_per_sweep;
        let mut grid: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    r.upper
                } else {
                    r.lower + (r.upper - r.lower) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        if !grid.contains(&r.value) {
            grid.push(r.value);
        }
        grid
    }

    /// Grid spacing for parameter `k`.
    pub fn cell(&self, k: usize) -> f64 {
        let r = &self.parameters[k];
        (r.upper - r.lower) / (self.candidates_per_sweep - 1) as f64
    }

    /// Incumbent values applied onto `base`.
    pub fn apply(&self, base: &ZoneThermalParams) -> ZoneThermalParams {
        let mut p = *base;
        for r in &self.parameters {
            r.parameter.set(&mut p, r.value);
        }
        p
    }
}

/// Inputs shared by every co-simulation of a calibration run.
///
/// The HVAC input is the measured compressor duty in `[0, 1]`, so the applied
/// heat flow is `-duty * hvac_max_cooling` and the capacity itself can be
/// calibrated.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationScenario {
    pub base_params: ZoneThermalParams,
    pub initial_temp: f64,
    pub weather: TimeSeries,
    pub occupancy: TimeSeries,
    pub hvac_duty: TimeSeries,
    pub method: StepMethod,
}

impl CalibrationScenario {
    /// Simulated indoor trace under `params`.
    pub fn simulate(&self, params: &ZoneThermalParams) -> Result<TimeSeries> {
        let plan = self.hvac_duty.with_values(
            self.hvac_duty
                .values()
                .iter()
                .map(|d| -d.clamp(0.0, 1.0) * params.hvac_max_cooling)
                .collect(),
        )?;
        Ok(simulate(params, self.initial_temp, &self.weather, &self.occupancy, &plan, self.method)?
            .indoor)
    }

    fn error(&self, params: &ZoneThermalParams, measured: &TimeSeries) -> Result<f64> {
        cvrmse(measured, &self.simulate(params)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOutcome {
    pub value: f64,
    pub error: f64,
    /// Co-simulations run for this sweep.
    pub evaluations: usize,
}

/// Best value of parameter `k` with all others held at their incumbents.
///
/// Ties go to the candidate closest to the incumbent, then to the smaller value.
pub fn sweep_parameter(
    k: usize,
    space: &CalibrationSpace,
    scenario: &CalibrationScenario,
    measured: &TimeSeries,
) -> Result<SweepOutcome> {
    if k >= space.parameters.len() {
        return Err(Error::Misaligned { expected: space.parameters.len(), found: k });
    }
    let range = space.parameters[k];
    let base = space.apply(&scenario.base_params);
    let candidates = space.candidates(k);
    let mut best: Option<(f64, f64)> = None;
    for &value in &candidates {
        let mut p = base;
        range.parameter.set(&mut p, value);
        let err = scenario.error(&p, measured)?;
        let better = match best {
            None => true,
            Some((bv, be)) => {
                if err != be {
                    err < be
                } else {
                    let (d, bd) = (libm::fabs(value - range.value), libm::fabs(bv - range.value));
                    d < bd || (d == bd && value < bv)
                }
            }
        };
        if better {
            best = Some((value, err));
        }
    }
    let (value, error) = best.expect("candidate grid is never empty");
    Ok(SweepOutcome { value, error, evaluations: candidates.len() })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundRecord {
    pub round: usize,
    pub values: Vec<f64>,
    pub cvrmse: f64,
    pub mbe: f64,
    pub cosimulations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationResult {
    pub parameters: Vec<ZoneParameter>,
    pub values: Vec<f64>,
    pub cvrmse: f64,
    pub mbe: f64,
    pub rounds: usize,
    pub cosimulations: usize,
    pub converged: bool,
    pub history: Vec<RoundRecord>,
}

impl CalibrationResult {
    pub fn apply(&self, base: &ZoneThermalParams) -> ZoneThermalParams {
        let mut p = *base;
        for (param, &v) in self.parameters.iter().zip(&self.values) {
            param.set(&mut p, v);
        }
        p
    }
}

/// Cyclic coordinate-descent calibration.
///
/// Every round computes each parameter's minimiser against the same incumbent
/// configuration, so the outcome does not depend on parameter order. If the
/// joint commit would raise the error, only the single best coordinate move is
/// committed, which keeps the committed error non-increasing across rounds.
pub fn calibrate(
    space: &CalibrationSpace,
    scenario: &CalibrationScenario,
    measured: &TimeSeries,
) -> Result<CalibrationResult> {
    space.validate()?;
    scenario.weather.ensure_aligned(measured)?;
    let mut space = space.clone();
    let mut history = Vec::new();
    let mut cosimulations = 0;
    let mut incumbent_error: Option<f64> = None;

    for round in 1..=space.max_rounds {
        let mut round_sims = 0;
        let mut sweeps = Vec::with_capacity(space.parameters.len());
        for k in 0..space.parameters.len() {
            let s = sweep_parameter(k, &space, scenario, measured)?;
            round_sims += s.evaluations;
            sweeps.push(s);
        }

        let mut joint = space.clone();
        for (r, s) in joint.parameters.iter_mut().zip(&sweeps) {
            r.value = s.value;
        }
        let joint_params = joint.apply(&scenario.base_params);
        let simulated = scenario.simulate(&joint_params)?;
        round_sims += 1;
        let mut err = cvrmse(measured, &simulated)?;
        let mut bias = mbe(measured, &simulated)?;

        let best_single = sweeps
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(k, s)| (k, *s))
            .expect("space is non-empty");
        if err > best_single.1.error {
            let (k, s) = best_single;
            joint = space.clone();
            joint.parameters[k].value = s.value;
            let simulated = scenario.simulate(&joint.apply(&scenario.base_params))?;
            round_sims += 1;
            err = cvrmse(measured, &simulated)?;
            bias = mbe(measured, &simulated)?;
        }
        debug_assert!(incumbent_error.is_none_or(|e| err <= e));

        space = joint;
        incumbent_error = Some(err);
        cosimulations += round_sims;
        history.push(RoundRecord {
            round,
            values: space.parameters.iter().map(|r| r.value).collect(),
            cvrmse: err,
            mbe: bias,
            cosimulations: round_sims,
        });
        if err < space.threshold {
            break;
        }
    }

    let last = history.last().expect("at least one round runs");
    Ok(CalibrationResult {
        parameters: space.parameters.iter().map(|r| r.parameter).collect(),
        values: last.values.clone(),
        cvrmse: last.cvrmse,
        mbe: last.mbe,
        rounds: history.len(),
        cosimulations,
        converged: last.cvrmse < space.threshold,
        history,
    })
}

//! Reference optimal control problem, the penalty functional that scores
//! controllers and the two reference strategies (dynamic programming and
//! the myopic ad-hoc controller).
//!
//! The problem's dynamics are forward Euler on the zone model. When a
//! temperature resolution is set, the indoor temperature is rounded to that
//! grid after every step; the dynamic program works on exactly those
//! dynamics, so its optimum is a true lower bound over every plan whose
//! actions lie on the action grid.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::comfort::{comfort_band, ComfortAssumptions};
use crate::thermal::ZoneThermalParams;
use crate::{Error, Result, TimeSeries};

pub const DEFAULT_ACTION_LEVELS: usize = 5;
pub const DEFAULT_TEMP_RESOLUTION: f64 = 0.05;
pub const MAX_DP_HORIZON: usize = 288;
pub const DEFAULT_RHO: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PenaltyWeights {
    /// Per °C·step above the band.
    pub rho_over: f64,
    /// Per °C·step below the band.
    pub rho_under: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { rho_over: DEFAULT_RHO, rho_under: DEFAULT_RHO }
    }
}

impl PenaltyWeights {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("rho_over", self.rho_over), ("rho_under", self.rho_under)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
            if v < 0.0 {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub params: ZoneThermalParams,
    pub initial_temp: f64,
    pub outdoor: TimeSeries,
    pub occupancy: TimeSeries,
    /// Comfort band `(lower, upper)` per step.
    pub band: Vec<(f64, f64)>,
    pub action_levels: usize,
    /// Indoor temperature grid; `None` keeps the dynamics continuous.
    pub temp_resolution: Option<f64>,
}

impl ControlProblem {
    /// Builds the band from humidity with the given comfort assumptions.
    pub fn from_humidity(
        params: ZoneThermalParams,
        initial_temp: f64,
        outdoor: TimeSeries,
        humidity: &TimeSeries,
        occupancy: TimeSeries,
        assumptions: &ComfortAssumptions,
    ) -> Result<Self> {
        outdoor.ensure_aligned(humidity)?;
        let band = humidity
            .values()
            .iter()
            .map(|&rh| comfort_band(rh, assumptions))
            .collect::<Result<Vec<_>>>()?;
        let problem = Self {
            params,
            initial_temp,
            outdoor,
            occupancy,
            band,
            action_levels: DEFAULT_ACTION_LEVELS,
            temp_resolution: Some(DEFAULT_TEMP_RESOLUTION),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn horizon(&self) -> usize {
        self.outdoor.len()
    }

    pub fn dt(&self) -> f64 {
        self.outdoor.step() as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.outdoor.ensure_aligned(&self.occupancy)?;
        if self.band.len() != self.horizon() {
            return Err(Error::Misaligned { expected: self.horizon(), found: self.band.len() });
        }
        if self.band.iter().any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::EmptyComfortBand);
        }
        if !self.initial_temp.is_finite() {
            return Err(Error::NonFinite("initial temperature"));
        }
        if self.action_levels < 2 {
            return Err(Error::OutOfRange { what: "action levels", value: self.action_levels as f64 });
        }
        if let Some(q) = self.temp_resolution {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::OutOfRange { what: "temperature resolution", value: q });
            }
        }
        if self.dt() >= self.params.euler_step_limit() {
            return Err(Error::UnstableStep { dt: self.dt(), limit: self.params.euler_step_limit() });
        }
        Ok(())
    }

    /// Cooling levels from off to full capacity.
    pub fn actions(&self) -> Vec<f64> {
        let last = self.action_levels - 1;
        let q_max = self.params.hvac_max_cooling;
        (0..self.action_levels)
            .map(|k| if k == last { -q_max } else { -q_max * k as f64 / last as f64 })
            .collect()
    }

    fn occupied(&self, t: usize) -> bool {
        self.occupancy.values()[t] > 0.0
    }

    /// Indoor temperature after step `t` from `indoor` under `q_ac`.
    pub fn transition(&self, t: usize, indoor: f64, q_ac: f64) -> f64 {
        let p = &self.params;
        let t_eq = p.equilibrium(self.outdoor.values()[t], self.occupancy.values()[t], q_ac);
        let next = indoor + self.dt() / p.time_constant() * (t_eq - indoor);
        match self.temp_resolution {
            Some(q) => libm::round(next / q) * q,
            None => next,
        }
    }

    /// Energy (Wh) and weighted violation of step `t` landing on `after`.
    fn stage(&self, t: usize, q_ac: f64, after: f64, weights: &PenaltyWeights) -> (f64, f64) {
        let energy = self.params.electrical_energy_wh(q_ac, self.dt());
        let violation = if self.occupied(t) {
            let (lo, hi) = self.band[t];
            weights.rho_over * (after - hi).max(0.0) + weights.rho_under * (lo - after).max(0.0)
        } else {
            0.0
        };
        (energy, violation)
    }
}

/// Penalty of a plan, split into its energy and comfort parts.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Penalty {
    pub alpha: f64,
    pub energy_wh: f64,
    pub violation: f64,
}

/// `Σ E(Q_ac) + ρ_over Σ [T − T̄]⁺ + ρ_under Σ [T̲ − T]⁺`, comfort terms
/// counted only at occupied steps.
pub fn penalty_alpha(
    plan: &[f64],
    problem: &ControlProblem,
    weights: &PenaltyWeights,
) -> Result<Penalty> {
    problem.validate()?;
    weights.validate()?;
    if plan.len() != problem.horizon() {
        return Err(Error::Misaligned { expected: problem.horizon(), found: plan.len() });
    }
    let mut indoor = problem.initial_temp;
    let mut alpha = 0.0;
    let (mut energy_wh, mut violation) = (0.0, 0.0);
    for (t, &q_ac) in plan.iter().enumerate() {
        if !q_ac.is_finite() {
            return Err(Error::NonFinite("plan"));
        }
        if q_ac > 0.0 {
            return Err(Error::HeatingRequested(q_ac));
        }
        indoor = problem.transition(t, indoor, q_ac);
        let (e, v) = problem.stage(t, q_ac, indoor, weights);
        alpha += e + v;
        energy_wh += e;
        violation += v;
    }
    Ok(Penalty { alpha, energy_wh, violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimise the penalty functional.
    Penalty,
    /// Minimise energy with the band enforced at occupied steps.
    HardComfort,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub plan: Vec<f64>,
    pub objective: f64,
}

/// Dynamic programming over the quantized temperature grid.
///
/// Costs are accumulated forward along each path so the optimum equals the
/// left-to-right sum of its stage costs bit for bit.
pub fn solve_mpc(
    problem: &ControlProblem,
    weights: &PenaltyWeights,
    objective: Objective,
) -> Result<Solution> {
    problem.validate()?;
    weights.validate()?;
    let q = problem
        .temp_resolution
        .ok_or(Error::Invalid("dynamic programming needs a temperature resolution"))?;
    let n = problem.horizon();
    if n > MAX_DP_HORIZON {
        return Err(Error::LimitExceeded { what: "horizon", limit: MAX_DP_HORIZON, found: n });
    }
    let actions = problem.actions();

    struct Node {
        cost: f64,
        temp: f64,
        parent: usize,
        action: usize,
    }
    // layers[t] holds the states reached after t steps
    let mut layers: Vec<Vec<Node>> = Vec::with_capacity(n + 1);
    layers.push(vec![Node { cost: 0.0, temp: problem.initial_temp, parent: 0, action: 0 }]);
    for t in 0..n {
        let mut index: BTreeMap<i64, usize> = BTreeMap::new();
        let mut layer: Vec<Node> = Vec::new();
        for (pi, prev) in layers[t].iter().enumerate() {
            for (ai, &q_ac) in actions.iter().enumerate() {
                let after = problem.transition(t, prev.temp, q_ac);
                let (energy, violation) = problem.stage(t, q_ac, after, weights);
                let stage = match objective {
                    Objective::Penalty => energy + violation,
                    Objective::HardComfort if violation > 0.0 || outside(problem, t, after) => {
                        continue
                    }
                    Objective::HardComfort => energy,
                };
                let cost = prev.cost + stage;
                let bin = libm::round(after / q) as i64;
                match index.get(&bin) {
                    Some(&k) if layer[k].cost <= cost => {}
                    Some(&k) => layer[k] = Node { cost, temp: after, parent: pi, action: ai },
                    None => {
                        index.insert(bin, layer.len());
                        layer.push(Node { cost, temp: after, parent: pi, action: ai });
                    }
                }
            }
        }
        if layer.is_empty() {
            return Err(Error::Infeasible { step: t });
        }
        layers.push(layer);
    }
    let (mut best, objective) = layers[n]
        .iter()
        .enumerate()
        .map(|(i, node)| (i, node.cost))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let mut plan = vec![0.0; n];
    for t in (1..=n).rev() {
        let node = &layers[t][best];
        plan[t - 1] = actions[node.action];
        best = node.parent;
    }
    Ok(Solution { plan, objective })
}

fn outside(problem: &ControlProblem, t: usize, temp: f64) -> bool {
    let (lo, hi) = problem.band[t];
    problem.occupied(t) && (temp > hi || temp < lo)
}

/// Myopic controller: at each step the cheapest action whose next
/// temperature is inside the band when occupied, full cooling when none is.
pub fn solve_ahc(problem: &ControlProblem, weights: &PenaltyWeights) -> Result<Solution> {
    problem.validate()?;
    let actions = problem.actions();
    let full = actions[actions.len() - 1];
    let mut plan = Vec::with_capacity(problem.horizon());
    let mut indoor = problem.initial_temp;
    for t in 0..problem.horizon() {
        let q_ac = actions
            .iter()
            .copied()
            .find(|&a| !outside(problem, t, problem.transition(t, indoor, a)))
            .unwrap_or(full);
        indoor = problem.transition(t, indoor, q_ac);
        plan.push(q_ac);
    }
    let objective = penalty_alpha(&plan, problem, weights)?.alpha;
    Ok(Solution { plan, objective })
}

/// Scores a realised actuation trace (heat flow per step) on the problem.
pub fn score_controller(
    hvac: &TimeSeries,
    problem: &ControlProblem,
    weights: &PenaltyWeights,
) -> Result<Penalty> {
    problem.outdoor.ensure_aligned(hvac)?;
    penalty_alpha(hvac.values(), problem, weights)
}

/// Exhaustive search over every plan on the action grid; for small test
/// instances only.
pub fn enumerate_optimum(problem: &ControlProblem, weights: &PenaltyWeights) -> Result<f64> {
    problem.validate()?;
    let actions = problem.actions();
    let n = problem.horizon();
    let levels = actions.len();
    let total = levels
        .checked_pow(n as u32)
        .filter(|&c| c <= 1 << 20)
        .ok_or(Error::LimitExceeded { what: "enumeration size", limit: 1 << 20, found: usize::MAX })?;
    let mut best = f64::INFINITY;
    let mut plan = vec![0.0; n];
    for code in 0..total {
        let mut c = code;
        for slot in plan.iter_mut() {
            *slot = actions[c % levels];
            c /= levels;
        }
        best = best.min(penalty_alpha(&plan, problem, weights)?.alpha);
    }
    Ok(best)
}

/// Strategies named in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Mpc,
    AdHoc,
    /// Competitive-ratio online control; reserved, not provided.
    Online,
}

pub fn solve(kind: StrategyKind, problem: &ControlProblem, weights: &PenaltyWeights) -> Result<Solution> {
    match kind {
        StrategyKind::Mpc => solve_mpc(problem, weights, Objective::Penalty),
        StrategyKind::AdHoc => solve_ahc(problem, weights),
        StrategyKind::Online => Err(Error::Unimplemented("online competitive-ratio strategy")),
    }
}

//! Occupancy forecasting from event schedules.
//!
//! Four regression recipes share one featurisation:
//!
//! | recipe          | features                                         | samples                         |
//! |-----------------|--------------------------------------------------|---------------------------------|
//! | `AllData`       | minute of day, holiday, weekday dummies          | all history                     |
//! | `SpecialEvent`  | minutes since/until event, special-case flag     | all history                     |
//! | `DomainLinear`  | minutes since/until event, holiday, weekday      | trailing 30 days, near events   |
//! | `DomainPoly`    | `DomainLinear` + squares and product of deltas   | trailing 30 days, near events   |
//!
//! Targets are occupancy counts divided by the schedule capacity. Domain
//! recipes only train on samples within the event window and forecast zero
//! outside it.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::linalg::least_squares;
use crate::{Error, Result, TimeSeries};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SECONDS_PER_WEEK: i64 = 7 * SECONDS_PER_DAY;
/// Forecast horizon used when scanning for the next occupied time.
pub const HORIZON_SECONDS: i64 = SECONDS_PER_DAY;
pub const DEFAULT_TRAINING_DAYS: u32 = 30;
pub const DEFAULT_WINDOW_MINUTES: f64 = 30.0;
pub const DEFAULT_ONSET_THRESHOLD: f64 = 0.05;

/// Days since the Unix epoch (UTC).
pub fn day_index(t: i64) -> i64 {
    t.div_euclid(SECONDS_PER_DAY)
}

/// Day of week with Monday = 0 … Sunday = 6 (UTC).
pub fn day_of_week(t: i64) -> u8 {
    // 1970-01-01 was a Thursday
    (day_index(t) + 3).rem_euclid(7) as u8
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventSchedule {
    events: Vec<i64>,
    /// Holiday day indices (days since epoch).
    holidays: BTreeSet<i64>,
    /// Special-case day indices.
    special_days: BTreeSet<i64>,
    capacity: f64,
}

impl EventSchedule {
    pub fn new(events: Vec<i64>, capacity: f64) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::Empty("event schedule"));
        }
        if let Some(w) = events.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::OutOfOrder { previous: w[0], found: w[1] });
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(Error::OutOfRange { what: "capacity", value: capacity });
        }
        Ok(Self { events, holidays: BTreeSet::new(), special_days: BTreeSet::new(), capacity })
    }

    pub fn with_holidays(mut self, days: impl IntoIterator<Item = i64>) -> Self {
        self.holidays.extend(days);
        self
    }

    pub fn with_special_days(mut self, days: impl IntoIterator<Item = i64>) -> Self {
        self.special_days.extend(days);
        self
    }

    pub fn events(&self) -> &[i64] {
        &self.events
    }

    pub fn holidays(&self) -> impl Iterator<Item = i64> + '_ {
        self.holidays.iter().copied()
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn is_holiday(&self, t: i64) -> bool {
        self.holidays.contains(&day_index(t))
    }

    pub fn is_special(&self, t: i64) -> bool {
        self.special_days.contains(&day_index(t))
    }

    /// `[first event, last event)`: times with a past and a next event.
    pub fn covers(&self, t: i64) -> bool {
        t >= self.events[0] && t < self.events[self.events.len() - 1]
    }

    /// Latest event at or before `t` and earliest event after `t`.
    pub fn bracket(&self, t: i64) -> Result<(i64, i64)> {
        if !self.covers(t) {
            return Err(Error::OutsideSchedule(t));
        }
        let i = self.events.partition_point(|&e| e <= t);
        Ok((self.events[i - 1], self.events[i]))
    }

    /// Minutes to the nearest scheduled event.
    pub fn minutes_to_nearest(&self, t: i64) -> Result<f64> {
        let (past, next) = self.bracket(t)?;
        Ok(((t - past).min(next - t)) as f64 / 60.0)
    }
}

/// Calendar and event features of one time instant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRow {
    pub minutes_since_past_event: f64,
    pub minutes_until_next_event: f64,
    pub holiday: bool,
    /// Monday = 0.
    pub day_of_week: u8,
    pub special_case: bool,
    pub minute_of_day: f64,
}

pub fn featurize(t: i64, schedule: &EventSchedule) -> Result<FeatureRow> {
    let (past, next) = schedule.bracket(t)?;
    Ok(FeatureRow {
        minutes_since_past_event: (t - past) as f64 / 60.0,
        minutes_until_next_event: (next - t) as f64 / 60.0,
        holiday: schedule.is_holiday(t),
        day_of_week: day_of_week(t),
        special_case: schedule.is_special(t),
        minute_of_day: t.rem_euclid(SECONDS_PER_DAY) as f64 / 60.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Recipe {
    #[cfg_attr(feature = "serde", serde(rename = "AllData"))]
    AllData,
    #[cfg_attr(feature = "serde", serde(rename = "SpEv"))]
    SpecialEvent,
    #[cfg_attr(feature = "serde", serde(rename = "DomSp-linear"))]
    DomainLinear,
    #[cfg_attr(feature = "serde", serde(rename = "DomSp-poly"))]
    DomainPoly,
}

impl Recipe {
    pub const ALL: [Recipe; 4] =
        [Recipe::AllData, Recipe::SpecialEvent, Recipe::DomainLinear, Recipe::DomainPoly];

    pub fn id(self) -> &'static str {
        match self {
            Recipe::AllData => "AllData",
            Recipe::SpecialEvent => "SpEv",
            Recipe::DomainLinear => "DomSp-linear",
            Recipe::DomainPoly => "DomSp-poly",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.id() == id)
    }

    pub fn is_domain_specific(self) -> bool {
        matches!(self, Recipe::DomainLinear | Recipe::DomainPoly)
    }

    /// Number of columns in the expanded design row, intercept included.
    pub fn feature_count(self) -> usize {
        match self {
            Recipe::AllData => 9,
            Recipe::SpecialEvent => 4,
            Recipe::DomainLinear => 10,
            Recipe::DomainPoly => 13,
        }
    }

    /// Design row for this recipe.
    pub fn expand(self, row: &FeatureRow) -> Vec<f64> {
        let past = row.minutes_since_past_event;
        let next = row.minutes_until_next_event;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        // Monday is the reference level
        let weekdays = (1..7u8).map(|d| flag(row.day_of_week == d));
        let mut x = Vec::with_capacity(self.feature_count());
        x.push(1.0);
        match self {
            Recipe::AllData => {
                x.push(row.minute_of_day);
                x.push(flag(row.holiday));
                x.extend(weekdays);
            }
            Recipe::SpecialEvent => {
                x.extend([past, next, flag(row.special_case)]);
            }
            Recipe::DomainLinear | Recipe::DomainPoly => {
                x.extend([past, next, flag(row.holiday)]);
                x.extend(weekdays);
                if self == Recipe::DomainPoly {
                    x.extend([past * past, next * next, past * next]);
                }
            }
        }
        debug_assert_eq!(x.len(), self.feature_count());
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    /// Trailing training window for domain recipes, days.
    pub training_days: u32,
    /// Half-width of the sampling window around events for domain recipes, minutes.
    pub window_minutes: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { training_days: DEFAULT_TRAINING_DAYS, window_minutes: DEFAULT_WINDOW_MINUTES }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionModel {
    pub recipe: Recipe,
    pub coefficients: Vec<f64>,
    pub training_days: Option<u32>,
    pub window_minutes: Option<f64>,
}

impl RegressionModel {
    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.recipe.feature_count() {
            return Err(Error::Misaligned {
                expected: self.recipe.feature_count(),
                found: self.coefficients.len(),
            });
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("model coefficient"));
        }
        Ok(())
    }

    /// Unclamped linear prediction.
    pub fn raw(&self, t: i64, schedule: &EventSchedule) -> Result<f64> {
        let row = featurize(t, schedule)?;
        let x = self.recipe.expand(&row);
        Ok(x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum())
    }

    /// Normalised occupancy forecast in `[0, 1]`.
    pub fn predict(&self, t: i64, schedule: &EventSchedule) -> Result<f64> {
        if let Some(window) = self.window_minutes {
            if schedule.minutes_to_nearest(t)? > window {
                return Ok(0.0);
            }
        }
        Ok(self.raw(t, schedule)?.clamp(0.0, 1.0))
    }

    /// First time after `t_now` (scanning every `step` seconds, 24 h ahead)
    /// whose forecast reaches `threshold`.
    pub fn next_occupied_time(
        &self,
        schedule: &EventSchedule,
        t_now: i64,
        step: i64,
        threshold: f64,
    ) -> Option<i64> {
        next_occupied_time(|t| self.predict(t, schedule).ok(), t_now, step, threshold)
    }
}

/// Scan `predict` on `t_now + step, t_now + 2 step, …` up to 24 h ahead.
///
/// Times the predictor cannot evaluate count as unoccupied.
pub fn next_occupied_time<F>(predict: F, t_now: i64, step: i64, threshold: f64) -> Option<i64>
where
    F: Fn(i64) -> Option<f64>,
{
    if step <= 0 {
        return None;
    }
    let steps = HORIZON_SECONDS / step;
    (1..=steps)
        .map(|k| t_now + k * step)
        .find(|&t| predict(t).is_some_and(|y| y >= threshold))
}

/// Fits `recipe` on `history` (raw counts) strictly before `as_of`.
///
/// Samples the schedule cannot featurise are skipped.
pub fn fit(
    history: &TimeSeries,
    schedule: &EventSchedule,
    recipe: Recipe,
    as_of: i64,
    config: &FitConfig,
) -> Result<RegressionModel> {
    let domain = recipe.is_domain_specific();
    let earliest = if domain {
        as_of - i64::from(config.training_days) * SECONDS_PER_DAY
    } else {
        i64::MIN
    };
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, &count) in history.values().iter().enumerate() {
        let t = history.time_at(i);
        if t < earliest || t >= as_of {
            continue;
        }
        let Ok(row) = featurize(t, schedule) else { continue };
        if domain
            && row.minutes_since_past_event.min(row.minutes_until_next_event) > config.window_minutes
        {
            continue;
        }
        rows.push(recipe.expand(&row));
        targets.push(count / schedule.capacity());
    }
    let needed = 2 * recipe.feature_count();
    if rows.len() < needed {
        return Err(Error::InsufficientData { needed, found: rows.len() });
    }
    let coefficients = least_squares(&rows, &targets, recipe.feature_count())?;
    Ok(RegressionModel {
        recipe,
        coefficients,
        training_days: domain.then_some(config.training_days),
        window_minutes: domain.then_some(config.window_minutes),
    })
}

/// Value `history` held one week before `t` (nearest sample).
pub fn last_week_baseline(history: &TimeSeries, t: i64) -> Result<f64> {
    let target = t - SECONDS_PER_WEEK;
    history
        .nearest_index(target)
        .map(|i| history.values()[i])
        .ok_or(Error::InsufficientData { needed: 1, found: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    pub r_squared: f64,
    pub rmse: f64,
}

/// R² and RMSE of `predictions` against `truth` (both normalised).
pub fn evaluate(predictions: &TimeSeries, truth: &TimeSeries) -> Result<Evaluation> {
    evaluate_values(predictions.values(), truth.values())
}

pub fn evaluate_values(predictions: &[f64], truth: &[f64]) -> Result<Evaluation> {
    if predictions.len() != truth.len() {
        return Err(Error::Misaligned { expected: truth.len(), found: predictions.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty("truth"));
    }
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = truth.iter().zip(predictions).map(|(y, p)| (y - p) * (y - p)).sum();
    if truth.iter().all(|&y| y == truth[0]) {
        return Err(Error::ZeroDenominator("R-squared (zero-variance truth)"));
    }
    Ok(Evaluation { r_squared: 1.0 - ss_res / ss_tot, rmse: libm::sqrt(ss_res / n) })
}

//! Held-out-day comparison of the occupancy forecasters.

use occmpc_core::forecast::{
    evaluate_values, fit, last_week_baseline, EventSchedule, Evaluation, FitConfig, Recipe,
    SECONDS_PER_DAY,
};
use occmpc_core::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastScore {
    pub name: String,
    pub r_squared: f64,
    pub rmse: f64,
}

/// Scores every regression recipe plus the same-time-last-week baseline on
/// the day starting at `held_out`, training strictly before it. Values are
/// normalised by the schedule's capacity.
pub fn compare_forecasters(
    history: &TimeSeries,
    schedule: &EventSchedule,
    held_out: i64,
    config: &FitConfig,
) -> Result<Vec<ForecastScore>> {
    let from = history
        .index_of(held_out)
        .ok_or_else(|| crate::Error::input("held-out day is not in the history"))?;
    let len = (SECONDS_PER_DAY / history.step()) as usize;
    let day = history.slice(from, (from + len).min(history.len()))?;
    let truth: Vec<f64> = day.values().iter().map(|c| c / schedule.capacity()).collect();
    let times: Vec<i64> = (0..day.len()).map(|i| day.time_at(i)).collect();
    let mut out = Vec::new();
    for recipe in Recipe::ALL {
        let model = fit(history, schedule, recipe, held_out, config)?;
        let predicted = times.iter().map(|&t| model.predict(t, schedule)).collect::<Result<Vec<_>, _>>()?;
        out.push(score(format!("LR_{}", recipe.id()), &predicted, &truth)?);
    }
    let last_week = times
        .iter()
        .map(|&t| last_week_baseline(history, t).map(|c| c / schedule.capacity()))
        .collect::<Result<Vec<_>, _>>()?;
    out.push(score("LastWeek".into(), &last_week, &truth)?);
    Ok(out)
}

fn score(name: String, predicted: &[f64], truth: &[f64]) -> Result<ForecastScore> {
    let Evaluation { r_squared, rmse } = evaluate_values(predicted, truth)?;
    Ok(ForecastScore { name, r_squared, rmse })
}

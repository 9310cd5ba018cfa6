//! Scenario assembly, paired controller runs and reporting.

use std::collections::BTreeMap;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::thread;

use occmpc_core::closed_loop::{
    comfort_stats, run_closed_loop, ClosedLoopInputs, ClosedLoopRun, ComfortStats, ControllerKind,
    ZonePlant,
};
use occmpc_core::counter::{occupancy_trace, DEFAULT_IDLE_TIMEOUT};
use occmpc_core::forecast::{day_index, fit, EventSchedule, FitConfig, RegressionModel, SECONDS_PER_DAY};
use occmpc_core::mpc::{ControllerConfig, OccupancyForecaster};
use occmpc_core::strategy::{score_controller, ControlProblem, Penalty};
use occmpc_core::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::config::{OccupancySource, ScenarioConfig, SignalSource, Transport};
use crate::generator::{generate, GeneratorConfig};
use crate::io::{format_timestamp, read_events, read_holidays, read_schedule, read_trace, write_decisions, write_table};
use crate::wire::{init_message, serve_tcp, RemotePlant};
use crate::{Error, Result};

/// Occupancy history, schedule and the controlled-period signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    /// Head counts from the start of history to the end of the run.
    pub history: TimeSeries,
    pub schedule: EventSchedule,
    /// Signals over the controlled period only.
    pub inputs: ClosedLoopInputs,
}

fn signal(source: &SignalSource, start: i64, step: i64, len: usize) -> Result<TimeSeries> {
    match source {
        SignalSource::Cycle(c) => c.series(start, step, len),
        SignalSource::Csv { path } => window(&read_trace(path)?, start, step, len),
    }
}

fn window(series: &TimeSeries, start: i64, step: i64, len: usize) -> Result<TimeSeries> {
    if series.step() != step {
        return Err(Error::input(format!("trace step {} differs from scenario step {step}", series.step())));
    }
    let from = series
        .index_of(start)
        .ok_or_else(|| Error::input(format!("trace does not cover {}", format_timestamp(start))))?;
    if from + len > series.len() {
        return Err(Error::input("trace ends before the scenario does"));
    }
    Ok(series.slice(from, from + len)?)
}

pub fn load_data(config: &ScenarioConfig) -> Result<ScenarioData> {
    config.validate()?;
    let total_days = config.history_days + config.days;
    let total = (i64::from(total_days) * SECONDS_PER_DAY / config.step) as usize;
    let (history, schedule) = match &config.occupancy {
        OccupancySource::Generator(g) => {
            let g = GeneratorConfig { start: config.start, days: total_days, step: config.step, ..g.clone() };
            let out = generate(&g)?;
            (out.occupancy, EventSchedule::new(out.schedule, g.capacity)?)
        }
        OccupancySource::Trace { path, capacity } => {
            (window(&read_trace(path)?, config.start, config.step, total)?, file_schedule(config, *capacity)?)
        }
        OccupancySource::Events { path, capacity } => {
            let events = read_events(path)?;
            let trace = occupancy_trace(&events, config.start, config.step, total, DEFAULT_IDLE_TIMEOUT)?;
            (trace, file_schedule(config, *capacity)?)
        }
    };
    let run_start = config.run_start();
    let n = config.run_steps();
    let inputs = ClosedLoopInputs {
        weather: signal(&config.weather, run_start, config.step, n)?,
        humidity: signal(&config.humidity, run_start, config.step, n)?,
        occupancy: window(&history, run_start, config.step, n)?,
    };
    Ok(ScenarioData { history, schedule, inputs })
}

fn file_schedule(config: &ScenarioConfig, capacity: f64) -> Result<EventSchedule> {
    let files = config.schedule.as_ref().ok_or_else(|| Error::input("missing schedule"))?;
    let mut schedule = EventSchedule::new(read_schedule(&files.events)?, capacity)?;
    if let Some(p) = &files.holidays {
        schedule = schedule.with_holidays(read_holidays(p)?);
    }
    if let Some(p) = &files.special_days {
        schedule = schedule.with_special_days(read_holidays(p)?);
    }
    Ok(schedule)
}

/// Regression forecaster refitted at every midnight on the history seen so
/// far.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRefitForecaster {
    schedule: EventSchedule,
    models: BTreeMap<i64, RegressionModel>,
    step: i64,
    threshold: f64,
}

impl DailyRefitForecaster {
    pub fn train(config: &ScenarioConfig, data: &ScenarioData) -> Self {
        let fit_config = FitConfig {
            training_days: config.forecast.training_days,
            window_minutes: config.forecast.window_minutes,
        };
        let first = day_index(config.run_start());
        let models = (first..first + i64::from(config.days))
            .filter_map(|day| {
                let as_of = day * SECONDS_PER_DAY;
                fit(&data.history, &data.schedule, config.forecast.recipe, as_of, &fit_config)
                    .ok()
                    .map(|m| (day, m))
            })
            .collect();
        Self { schedule: data.schedule.clone(), models, step: config.step, threshold: config.forecast.threshold }
    }

    pub fn model_for(&self, t: i64) -> Option<&RegressionModel> {
        self.models.get(&day_index(t))
    }
}

impl OccupancyForecaster for DailyRefitForecaster {
    fn next_occupied(&self, t_now: i64) -> Option<i64> {
        self.model_for(t_now)?.next_occupied_time(&self.schedule, t_now, self.step, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub energy_wh: f64,
    pub per_day_energy_wh: Vec<f64>,
    pub comfort: ComfortStats,
    pub penalty: Penalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub controller: ControllerKind,
    pub start: String,
    pub step_s: i64,
    pub steps: usize,
    pub run: RunSummary,
    pub baseline: Option<RunSummary>,
    /// `(E_baseline - E_run) / E_baseline`, percent.
    pub savings_percent: Option<f64>,
    pub decisions: usize,
    pub decision_log: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub report: ScenarioReport,
    pub run: ClosedLoopRun,
    pub baseline: Option<ClosedLoopRun>,
    pub data: ScenarioData,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputPaths {
    pub decision_log: Option<PathBuf>,
    pub timeseries: Option<PathBuf>,
}

fn drive(
    config: &ScenarioConfig,
    inputs: &ClosedLoopInputs,
    kind: ControllerKind,
    forecaster: &dyn OccupancyForecaster,
) -> Result<ClosedLoopRun> {
    let mut controller = ControllerConfig::new(config.params, config.policy, config.step);
    controller.method = config.method;
    controller.onset_grace = config.onset_grace_s;
    let dt = config.step as f64;
    match config.transport {
        Transport::InProcess => {
            let mut plant = ZonePlant::new(config.params, config.initial_temp, dt, config.method)?;
            Ok(run_closed_loop(&mut plant, config.initial_temp, inputs, kind, &controller, forecaster)?)
        }
        Transport::Socket => {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let server = thread::spawn(move || serve_tcp(&listener, Some(1)));
            let init = init_message(config.params, config.policy, config.initial_temp, dt, config.method);
            let mut plant = RemotePlant::connect(addr, &init)?;
            let run = run_closed_loop(&mut plant, config.initial_temp, inputs, kind, &controller, forecaster);
            plant.finish()?;
            server
                .join()
                .map_err(|_| Error::Protocol { code: "server".into(), text: "simulator thread panicked".into() })??;
            run
        }
    }
}

fn summarise(config: &ScenarioConfig, data: &ScenarioData, run: &ClosedLoopRun) -> Result<RunSummary> {
    let inputs = &data.inputs;
    let per_day = (SECONDS_PER_DAY / config.step) as usize;
    let problem = ControlProblem::from_humidity(
        config.params,
        config.initial_temp,
        inputs.weather.clone(),
        &inputs.humidity,
        inputs.occupancy.clone(),
        &config.comfort,
    )?;
    let hvac = inputs.weather.with_values(run.hvac.clone())?;
    Ok(RunSummary {
        energy_wh: run.total_energy_wh(),
        per_day_energy_wh: run.step_energy_wh.chunks(per_day).map(|c| c.iter().sum()).collect(),
        comfort: comfort_stats(
            &run.indoor,
            inputs.humidity.values(),
            inputs.occupancy.values(),
            &config.comfort,
        )?,
        penalty: score_controller(&hvac, &problem, &config.weights)?,
    })
}

pub fn run_scenario(config: &ScenarioConfig, outputs: &OutputPaths) -> Result<ScenarioOutcome> {
    let data = load_data(config)?;
    let forecaster = DailyRefitForecaster::train(config, &data);
    let run = drive(config, &data.inputs, config.controller, &forecaster)?;
    let baseline = match config.controller {
        ControllerKind::HvacMpc => Some(drive(config, &data.inputs, ControllerKind::Baseline, &forecaster)?),
        ControllerKind::Baseline => None,
    };
    let summary = summarise(config, &data, &run)?;
    let base_summary = baseline.as_ref().map(|b| summarise(config, &data, b)).transpose()?;
    let savings_percent = base_summary
        .as_ref()
        .filter(|b| b.energy_wh > 0.0)
        .map(|b| (b.energy_wh - summary.energy_wh) / b.energy_wh * 100.0);

    if let Some(path) = &outputs.decision_log {
        write_decisions(path, &run.decisions)?;
    }
    if let Some(path) = &outputs.timeseries {
        write_timeseries(path, &data, &run, baseline.as_ref())?;
    }
    let report = ScenarioReport {
        controller: config.controller,
        start: format_timestamp(config.run_start()),
        step_s: config.step,
        steps: run.indoor.len(),
        run: summary,
        baseline: base_summary,
        savings_percent,
        decisions: run.decisions.len(),
        decision_log: outputs.decision_log.as_ref().map(|p| p.display().to_string()),
    };
    Ok(ScenarioOutcome { report, run, baseline, data })
}

fn write_timeseries(
    path: &Path,
    data: &ScenarioData,
    run: &ClosedLoopRun,
    baseline: Option<&ClosedLoopRun>,
) -> Result<()> {
    let i = &data.inputs;
    let mut columns: Vec<(&str, &[f64])> = vec![
        ("outdoor_c", i.weather.values()),
        ("humidity_pct", i.humidity.values()),
        ("occupancy", i.occupancy.values()),
        ("setpoint_c", &run.setpoints),
        ("indoor_c", &run.indoor),
        ("q_ac_w", &run.hvac),
        ("energy_wh", &run.step_energy_wh),
    ];
    if let Some(b) = baseline {
        columns.extend([
            ("baseline_indoor_c", b.indoor.as_slice()),
            ("baseline_q_ac_w", b.hvac.as_slice()),
            ("baseline_energy_wh", b.step_energy_wh.as_slice()),
        ]);
    }
    write_table(path, i.weather.start(), i.weather.step(), &columns)
}

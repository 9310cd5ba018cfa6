use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use occmpc::config::{
    CalibrationConfig, OccupancySource, ScenarioConfig, ScheduleFiles, SignalSource, Transport,
};
use occmpc::core::calibration::{calibrate, CalibrationScenario};
use occmpc::core::closed_loop::ControllerKind;
use occmpc::core::counter::{apply_event, CounterState, Direction, DEFAULT_IDLE_TIMEOUT};
use occmpc::core::forecast::{day_index, fit, EventSchedule, FitConfig, Recipe, SECONDS_PER_DAY};
use occmpc::core::thermal::{simulate, simulate_thermostat};
use occmpc::core::{StepMethod, TimeSeries, ZoneThermalParams};
use occmpc::evaluation::compare_forecasters;
use occmpc::generator::{generate, GeneratorConfig};
use occmpc::io::{
    parse_timestamp, read_events, read_holidays, read_schedule, read_trace, write_events, write_named_trace,
    write_schedule, write_trace,
};
use occmpc::scenario::{run_scenario, OutputPaths};
use occmpc::wire::{serve_stdio, serve_tcp};
use occmpc::{Error, Result};
use serde::Serialize;

/// Occupancy-driven predictive HVAC control toolkit.
#[derive(Debug, Parser)]
#[command(name = "occmpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the zone from weather, occupancy and an HVAC plan or setpoint schedule.
    Simulate(SimulateArgs),
    /// Fit zone parameters to a measured indoor-temperature trace.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Measured indoor trace.
        #[arg(long)]
        measured: PathBuf,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay crossing events into an occupancy trace.
    Count(CountArgs),
    /// Fit an occupancy forecaster and score it on the day that follows.
    Forecast(ForecastArgs),
    /// Run a scenario and report energy, comfort and savings.
    Control {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
        #[arg(long, value_enum)]
        transport: Option<TransportArg>,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-step CSV companion.
        #[arg(long)]
        timeseries: Option<PathBuf>,
        /// Controller decision log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Serve the zone simulator over the co-simulation protocol.
    Serve {
        /// TCP address, e.g. 127.0.0.1:7878.
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        listen: Option<String>,
        /// Exit after this many sessions.
        #[arg(long)]
        sessions: Option<usize>,
        /// Serve one session on stdin/stdout.
        #[arg(long)]
        stdio: bool,
    },
    /// Write a seeded synthetic scenario: traces, events, schedule and a scenario file.
    Generate(GenerateArgs),
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    /// Zone parameters JSON.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    weather: PathBuf,
    #[arg(long)]
    occupancy: PathBuf,
    /// Heat flow plan in W (negative is cooling).
    #[arg(long, conflicts_with = "setpoints", required_unless_present = "setpoints")]
    hvac: Option<PathBuf>,
    /// Thermostat setpoints in °C.
    #[arg(long)]
    setpoints: Option<PathBuf>,
    #[arg(long, default_value_t = 28.0)]
    initial_temp: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Euler)]
    method: MethodArg,
    /// Indoor trace CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CountArgs {
    #[arg(long)]
    events: PathBuf,
    /// First sample; defaults to the first event rounded down to the step.
    #[arg(long)]
    start: Option<String>,
    /// Sample after the last; defaults to one step past the last event.
    #[arg(long)]
    end: Option<String>,
    #[arg(long, default_value_t = 600)]
    step: i64,
    #[arg(long, default_value_t = DEFAULT_IDLE_TIMEOUT)]
    idle_timeout: i64,
    /// Occupancy trace CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ForecastArgs {
    /// Head-count trace.
    #[arg(long)]
    history: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    holidays: Option<PathBuf>,
    #[arg(long)]
    special_days: Option<PathBuf>,
    #[arg(long)]
    capacity: f64,
    #[arg(long, default_value = "DomSp-poly", value_parser = parse_recipe)]
    recipe: Recipe,
    /// Training cut-off (a UTC midnight); defaults to the start of the last day in the history.
    #[arg(long)]
    as_of: Option<String>,
    #[arg(long)]
    training_days: Option<u32>,
    #[arg(long)]
    window_minutes: Option<f64>,
    /// Model JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Controlled days written into the scenario.
    #[arg(long, default_value_t = 7)]
    days: u32,
    /// Days of history generated ahead of the controlled period.
    #[arg(long, default_value_t = 30)]
    history_days: u32,
    /// Generator settings JSON; seed and length come from the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Euler,
    Exact,
}

impl From<MethodArg> for StepMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Euler => StepMethod::Euler,
            MethodArg::Exact => StepMethod::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ControllerArg {
    Baseline,
    HvacMpc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransportArg {
    InProcess,
    Socket,
}

fn parse_recipe(s: &str) -> std::result::Result<Recipe, String> {
    Recipe::from_id(s).ok_or_else(|| {
        let ids: Vec<_> = Recipe::ALL.iter().map(|r| r.id()).collect();
        format!("unknown recipe {s:?}; expected one of {}", ids.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate_cmd(args),
        Command::Calibrate { config, measured, out } => calibrate_cmd(&config, &measured, out.as_deref()),
        Command::Count(args) => count_cmd(args),
        Command::Forecast(args) => forecast_cmd(args),
        Command::Control { scenario, controller, transport, out, timeseries, log } => {
            let mut config = ScenarioConfig::load(&scenario)?;
            if let Some(c) = controller {
                config.controller = match c {
                    ControllerArg::Baseline => ControllerKind::Baseline,
                    ControllerArg::HvacMpc => ControllerKind::HvacMpc,
                };
            }
            if let Some(t) = transport {
                config.transport = match t {
                    TransportArg::InProcess => Transport::InProcess,
                    TransportArg::Socket => Transport::Socket,
                };
            }
            let outcome = run_scenario(&config, &OutputPaths { decision_log: log, timeseries })?;
            emit_json(&outcome.report, out.as_deref())
        }
        Command::Serve { listen, sessions, stdio } => {
            if stdio {
                serve_stdio()?;
                return Ok(());
            }
            let addr = listen.expect("clap enforces --listen or --stdio");
            let listener = TcpListener::bind(&addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve_tcp(&listener, sessions)?;
            Ok(())
        }
        Command::Generate(args) => generate_cmd(args),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::File { path: path.display().to_string(), source }),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::File { path: path.display().to_string(), source })?;
    Ok(serde_json::from_str(&text)?)
}

fn emit_trace(series: &TimeSeries, column: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_named_trace(path, series, column),
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["timestamp", column])?;
            for (i, v) in series.values().iter().enumerate() {
                w.write_record([occmpc::io::format_timestamp(series.time_at(i)), v.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    energy_wh: f64,
    final_temp: f64,
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let params: ZoneThermalParams = match &args.params {
        Some(p) => read_json(p)?,
        None => ScenarioConfig::reference().params,
    };
    params.validate()?;
    let weather = read_trace(&args.weather)?;
    let occupancy = read_trace(&args.occupancy)?;
    let method = args.method.into();
    let (indoor, energy_wh) = match (&args.hvac, &args.setpoints) {
        (Some(plan), _) => {
            let out = simulate(&params, args.initial_temp, &weather, &occupancy, &read_trace(plan)?, method)?;
            (out.indoor, out.energy_wh)
        }
        (None, Some(sp)) => {
            let out = simulate_thermostat(&params, args.initial_temp, &weather, &occupancy, &read_trace(sp)?, method)?;
            (out.indoor, out.energy_wh)
        }
        (None, None) => return Err(Error::input("one of --hvac or --setpoints is required")),
    };
    emit_trace(&indoor, "indoor_c", args.out.as_deref())?;
    if args.out.is_some() {
        let summary = SimulationSummary {
            steps: indoor.len(),
            energy_wh,
            final_temp: indoor.values().last().copied().unwrap_or(args.initial_temp),
        };
        emit_json(&summary, None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CalibrationReport {
    result: occmpc::core::calibration::CalibrationResult,
    params: ZoneThermalParams,
}

fn calibrate_cmd(config: &Path, measured: &Path, out: Option<&Path>) -> Result<()> {
    let config = CalibrationConfig::load(config)?;
    let scenario = CalibrationScenario {
        base_params: config.base_params,
        initial_temp: config.initial_temp,
        weather: read_trace(&config.weather)?,
        occupancy: read_trace(&config.occupancy)?,
        hvac_duty: read_trace(&config.hvac_duty)?,
        method: config.method,
    };
    let measured = read_trace(measured)?;
    let result = calibrate(&config.space, &scenario, &measured)?;
    let params = result.apply(&config.base_params);
    emit_json(&CalibrationReport { result, params }, out)
}

#[derive(Serialize, Default)]
struct CountSummary {
    events: usize,
    total_in: u64,
    total_out: u64,
    underflows: u64,
    ignored_outward: u64,
    idle_resets: u64,
    peak: u32,
    final_occupants: u32,
}

fn count_cmd(args: CountArgs) -> Result<()> {
    if args.step <= 0 || args.idle_timeout < 0 {
        return Err(Error::input("step must be positive and idle timeout non-negative"));
    }
    let events = read_events(&args.events)?;
    let first = events.first().map(|e| e.timestamp);
    let last = events.last().map(|e| e.timestamp);
    let start = match &args.start {
        Some(s) => parse_timestamp(s)?,
        None => first.ok_or_else(|| Error::input("no events and no --start"))?.div_euclid(args.step) * args.step,
    };
    let end = match &args.end {
        Some(s) => parse_timestamp(s)?,
        None => last.map_or(start + args.step, |t| t.div_euclid(args.step) * args.step + args.step),
    };
    if end <= start {
        return Err(Error::input("--end must be after --start"));
    }
    let len = ((end - start) / args.step) as usize;
    let trace = occmpc::core::counter::occupancy_trace(&events, start, args.step, len, args.idle_timeout)?;

    let mut summary = CountSummary { events: events.len(), ..CountSummary::default() };
    let mut state = CounterState::new(first.map_or(start, |t| t.min(start)));
    for e in &events {
        match e.direction {
            Direction::Inward => summary.total_in += u64::from(e.count),
            Direction::Outward => summary.total_out += u64::from(e.count),
        }
        if e.timestamp - state.last_event_time > args.idle_timeout && state.occupants > 0 {
            summary.idle_resets += 1;
        }
        let was_frozen = state.frozen;
        state = apply_event(&state, e, args.idle_timeout)?;
        if e.direction == Direction::Outward {
            if was_frozen && state.frozen {
                summary.ignored_outward += 1;
            } else if state.frozen {
                summary.underflows += 1;
            }
        }
        summary.peak = summary.peak.max(state.occupants);
    }
    summary.final_occupants = state.occupants;

    emit_trace(&trace, "value", args.out.as_deref())?;
    if args.out.is_some() {
        emit_json(&summary, None)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ForecastReport {
    model: occmpc::core::forecast::RegressionModel,
    as_of: String,
    /// Scores of every recipe and the LastWeek baseline on the day from `as_of`.
    evaluation: Option<Vec<occmpc::evaluation::ForecastScore>>,
}

fn forecast_cmd(args: ForecastArgs) -> Result<()> {
    let history = read_trace(&args.history)?;
    let mut schedule = EventSchedule::new(read_schedule(&args.schedule)?, args.capacity)?;
    if let Some(p) = &args.holidays {
        schedule = schedule.with_holidays(read_holidays(p)?);
    }
    if let Some(p) = &args.special_days {
        schedule = schedule.with_special_days(read_holidays(p)?);
    }
    let as_of = match &args.as_of {
        Some(s) => parse_timestamp(s)?,
        None => day_index(history.end() - 1) * SECONDS_PER_DAY,
    };
    if as_of.rem_euclid(SECONDS_PER_DAY) != 0 {
        return Err(Error::input("--as-of must be a UTC midnight"));
    }
    let mut fit_config = FitConfig::default();
    if let Some(d) = args.training_days {
        fit_config.training_days = d;
    }
    if let Some(w) = args.window_minutes {
        fit_config.window_minutes = w;
    }
    let model = fit(&history, &schedule, args.recipe, as_of, &fit_config)?;
    let day_covered = history.index_of(as_of).is_some() && as_of + SECONDS_PER_DAY <= history.end();
    let evaluation = if day_covered {
        Some(compare_forecasters(&history, &schedule, as_of, &fit_config)?)
    } else {
        None
    };
    let report = ForecastReport { model, as_of: occmpc::io::format_timestamp(as_of), evaluation };
    emit_json(&report, args.out.as_deref())
}

fn generate_cmd(args: GenerateArgs) -> Result<()> {
    if args.days == 0 {
        return Err(Error::input("--days must be at least 1"));
    }
    let reference = ScenarioConfig::reference();
    let base: GeneratorConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => GeneratorConfig { step: reference.step, ..GeneratorConfig::default() },
    };
    let total_days = args.history_days + args.days;
    let cfg = GeneratorConfig { seed: args.seed, days: total_days, ..base };
    let out = generate(&cfg)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|source| Error::File { path: dir.display().to_string(), source })?;

    let n = out.occupancy.len();
    let signal = |source: &SignalSource| -> Result<TimeSeries> {
        match source {
            SignalSource::Cycle(c) => c.series(cfg.start, cfg.step, n),
            SignalSource::Csv { .. } => unreachable!("reference signals are cycles"),
        }
    };
    write_trace(&dir.join("occupancy.csv"), &out.occupancy)?;
    write_events(&dir.join("events.csv"), &out.events)?;
    write_schedule(&dir.join("schedule.csv"), &out.schedule)?;
    write_trace(&dir.join("weather.csv"), &signal(&reference.weather)?)?;
    write_trace(&dir.join("humidity.csv"), &signal(&reference.humidity)?)?;

    let scenario = ScenarioConfig {
        start: cfg.start,
        step: cfg.step,
        history_days: args.history_days,
        days: args.days,
        weather: SignalSource::Csv { path: "weather.csv".into() },
        humidity: SignalSource::Csv { path: "humidity.csv".into() },
        occupancy: OccupancySource::Events { path: "events.csv".into(), capacity: cfg.capacity },
        schedule: Some(ScheduleFiles { events: "schedule.csv".into(), holidays: None, special_days: None }),
        ..reference
    };
    emit_json(&scenario, Some(&dir.join("scenario.json")))
}

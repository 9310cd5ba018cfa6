use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use occmpc::core::calibration::{CalibrationSpace, ParameterRange, ZoneParameter};
use occmpc::core::thermal::simulate;
use occmpc::core::TimeSeries;
use occmpc::generator::DEFAULT_START;
use occmpc::io::{read_named_trace, read_trace, write_trace};
use occmpc::wire::{init_message, Message};
use serde_json::Value;

fn occmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_occmpc")).args(args).output().expect("binary runs")
}

fn reference_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/ref.json")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_and_flag_exit_one() {
    assert_eq!(occmpc(&["frobnicate"]).status.code(), Some(1));
    let out = occmpc(&["control", "--scenario", "x.json", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_input_file_exits_one() {
    assert_eq!(occmpc(&["control", "--scenario", "/definitely/missing.json"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(occmpc(&["--help"]).status.code(), Some(0));
}

#[test]
fn generate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(occmpc(&["generate", "--seed", "7", "--days", "7", "--out-dir", s(d)]).status.success());
    }
    for name in ["occupancy.csv", "events.csv", "schedule.csv", "weather.csv", "humidity.csv", "scenario.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    occmpc(&["generate", "--seed", "8", "--days", "7", "--out-dir", s(&c)]);
    assert_ne!(std::fs::read(a.join("events.csv")).unwrap(), std::fs::read(c.join("events.csv")).unwrap());
}

#[test]
fn control_reports_recomputable_savings() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let ts = dir.path().join("ts.csv");
    let report = json(&occmpc(&[
        "control",
        "--controller",
        "hvac-mpc",
        "--scenario",
        s(&reference_scenario()),
        "--log",
        s(&log),
        "--timeseries",
        s(&ts),
    ]));
    let e = report["run"]["energy_wh"].as_f64().unwrap();
    let eb = report["baseline"]["energy_wh"].as_f64().unwrap();
    assert_eq!(report["savings_percent"].as_f64().unwrap(), (eb - e) / eb * 100.0);
    let per_day: f64 = report["run"]["per_day_energy_wh"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((per_day - e).abs() < 1e-6 * e);
    assert!(report["run"]["penalty"]["alpha"].as_f64() < report["baseline"]["penalty"]["alpha"].as_f64());

    let log_text = std::fs::read_to_string(&log).unwrap();
    assert!(log_text.starts_with("timestamp,event,detail"));
    assert!(log_text.contains("precool_scheduled"));
    let indoor = read_named_trace(&ts, "indoor_c").unwrap();
    assert_eq!(indoor.len(), report["steps"].as_u64().unwrap() as usize);
}

#[test]
fn baseline_controller_has_no_savings_field() {
    let report = json(&occmpc(&["control", "--controller", "baseline", "--scenario", s(&reference_scenario())]));
    assert!(report["savings_percent"].is_null());
    assert!(report["baseline"].is_null());
}

fn day_series(value: impl Fn(usize) -> f64) -> TimeSeries {
    TimeSeries::new(DEFAULT_START, 600, (0..144).map(value).collect()).unwrap()
}

#[test]
fn simulate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let weather = day_series(|i| 30.0 + 8.0 * (i as f64 / 144.0 * std::f64::consts::TAU).sin());
    let occupancy = day_series(|i| if (60..80).contains(&i) { 120.0 } else { 0.0 });
    let plan = day_series(|i| if (55..85).contains(&i) { -60_000.0 } else { 0.0 });
    for (name, series) in [("w.csv", &weather), ("o.csv", &occupancy), ("h.csv", &plan)] {
        write_trace(&dir.path().join(name), series).unwrap();
    }
    let out_path = dir.path().join("indoor.csv");
    let out = occmpc(&[
        "simulate",
        "--weather",
        s(&dir.path().join("w.csv")),
        "--occupancy",
        s(&dir.path().join("o.csv")),
        "--hvac",
        s(&dir.path().join("h.csv")),
        "--method",
        "exact",
        "--out",
        s(&out_path),
    ]);
    let summary = json(&out);
    let params = occmpc::config::ScenarioConfig::reference().params;
    let expected =
        simulate(&params, 28.0, &weather, &occupancy, &plan, occmpc::core::StepMethod::Exact).unwrap();
    let got = read_named_trace(&out_path, "indoor_c").unwrap();
    assert_eq!(got, expected.indoor);
    assert_eq!(summary["energy_wh"].as_f64().unwrap(), expected.energy_wh);
}

#[test]
fn calibrate_recovers_generating_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let mut truth = occmpc::config::ScenarioConfig::reference().params;
    truth.heat_capacity = 3.0e7;
    truth.thermal_resistance = 2.0e-4;
    let weather = day_series(|i| 35.0 + 7.0 * ((i as f64 - 90.0) / 144.0 * std::f64::consts::TAU).cos());
    let occupancy = day_series(|i| if i % 30 < 6 { 100.0 } else { 0.0 });
    let duty = day_series(|i| if (i / 9) % 2 == 0 { 0.6 } else { 0.0 });
    let plan = duty.with_values(duty.values().iter().map(|d| -d * truth.hvac_max_cooling).collect()).unwrap();
    let measured = simulate(&truth, 27.0, &weather, &occupancy, &plan, occmpc::core::StepMethod::Euler).unwrap().indoor;
    for (name, series) in [("w.csv", &weather), ("o.csv", &occupancy), ("d.csv", &duty), ("m.csv", &measured)] {
        write_trace(&dir.path().join(name), series).unwrap();
    }
    let space = CalibrationSpace::new(vec![
        ParameterRange { parameter: ZoneParameter::HeatCapacity, lower: 1.5e7, upper: 4.5e7, value: 1.5e7 },
        ParameterRange { parameter: ZoneParameter::ThermalResistance, lower: 1.0e-4, upper: 3.0e-4, value: 3.0e-4 },
    ]);
    let config = serde_json::json!({
        "base_params": truth,
        "initial_temp": 27.0,
        "weather": "w.csv",
        "occupancy": "o.csv",
        "hvac_duty": "d.csv",
        "space": space,
    });
    let config_path = dir.path().join("calibration.json");
    std::fs::write(&config_path, config.to_string()).unwrap();
    let report = json(&occmpc(&[
        "calibrate",
        "--config",
        s(&config_path),
        "--measured",
        s(&dir.path().join("m.csv")),
    ]));
    assert_eq!(report["result"]["converged"], Value::Bool(true));
    assert!(report["result"]["cvrmse"].as_f64().unwrap() < 0.02);
    let c = report["params"]["heat_capacity"].as_f64().unwrap();
    let r = report["params"]["thermal_resistance"].as_f64().unwrap();
    assert!((c - 3.0e7).abs() <= 3.0e6 + 1.0, "{c}");
    assert!((r - 2.0e-4).abs() <= 2.0e-5 + 1e-12, "{r}");
}

#[test]
fn count_and_forecast_on_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert!(occmpc(&["generate", "--seed", "3", "--days", "2", "--history-days", "33", "--out-dir", s(&gen)])
        .status
        .success());
    let occupancy = read_trace(&gen.join("occupancy.csv")).unwrap();

    let trace_path = dir.path().join("count.csv");
    let start = occmpc::io::format_timestamp(occupancy.start());
    let end = occmpc::io::format_timestamp(occupancy.end());
    let summary = json(&occmpc(&[
        "count",
        "--events",
        s(&gen.join("events.csv")),
        "--start",
        &start,
        "--end",
        &end,
        "--step",
        &occupancy.step().to_string(),
        "--out",
        s(&trace_path),
    ]));
    assert_eq!(read_trace(&trace_path).unwrap(), occupancy);
    assert_eq!(summary["underflows"], 0);
    assert!(summary["peak"].as_u64().unwrap() > 300);

    let report = json(&occmpc(&[
        "forecast",
        "--history",
        s(&gen.join("occupancy.csv")),
        "--schedule",
        s(&gen.join("schedule.csv")),
        "--capacity",
        "500",
    ]));
    assert_eq!(report["model"]["recipe"], "DomSp-poly");
    let scores = report["evaluation"].as_array().unwrap();
    let poly = scores.iter().find(|x| x["name"] == "LR_DomSp-poly").unwrap();
    assert!(poly["r_squared"].as_f64().unwrap() > 0.5);

    let bad = occmpc(&[
        "forecast",
        "--history",
        s(&gen.join("occupancy.csv")),
        "--schedule",
        s(&gen.join("schedule.csv")),
        "--capacity",
        "500",
        "--recipe",
        "nope",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn serve_stdio_session() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_occmpc"))
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let params = occmpc::config::ScenarioConfig::reference().params;
    let init = init_message(params, Default::default(), 28.0, 600.0, Default::default());
    let step = Message::Step { index: 0, setpoint_c: 24.0, outdoor_c: 40.0, humidity_pct: 40.0, occupants: 10.0 };
    {
        let stdin = child.stdin.as_mut().unwrap();
        for m in [&init, &step, &Message::End] {
            writeln!(stdin, "{}", serde_json::to_string(m).unwrap()).unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let reply: Message = serde_json::from_slice(out.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    let Message::State { index, hvac_on, .. } = reply else { panic!("{reply:?}") };
    assert_eq!(index, 0);
    assert!(hvac_on);
}

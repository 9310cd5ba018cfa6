//! CSV formats. Timestamps are ISO-8601 in UTC (`2024-01-01T00:00:00Z`).

use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use occmpc_core::counter::{CrossingEvent, Direction};
use occmpc_core::forecast::day_index;
use occmpc_core::mpc::Decision;
use occmpc_core::TimeSeries;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn parse_timestamp(s: &str) -> Result<i64> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.timestamp())
        .map_err(|e| Error::input(format!("bad timestamp {s:?}: {e}")))
}

pub fn format_timestamp(t: i64) -> String {
    DateTime::<Utc>::from_timestamp(t, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.to_string())
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::File { path: path.display().to_string(), source })?;
    Ok(csv::Reader::from_reader(file))
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::File { path: path.display().to_string(), source })?;
    Ok(csv::Writer::from_writer(file))
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    timestamp: String,
    value: f64,
}

/// Reads `timestamp,value` rows sampled on a uniform clock.
pub fn read_trace(path: &Path) -> Result<TimeSeries> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for row in open(path)?.deserialize::<TraceRow>() {
        let row = row?;
        times.push(parse_timestamp(&row.timestamp)?);
        values.push(row.value);
    }
    trace_from_samples(&times, values)
}

pub fn trace_from_samples(times: &[i64], values: Vec<f64>) -> Result<TimeSeries> {
    if times.len() < 2 {
        return Err(Error::input("a trace needs at least two samples"));
    }
    let step = times[1] - times[0];
    if let Some(w) = times.windows(2).find(|w| w[1] - w[0] != step) {
        return Err(Error::input(format!(
            "non-uniform sampling at {}",
            format_timestamp(w[1])
        )));
    }
    Ok(TimeSeries::new(times[0], step, values)?)
}

pub fn write_trace(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut w = create(path)?;
    for (i, &value) in series.values().iter().enumerate() {
        w.serialize(TraceRow { timestamp: format_timestamp(series.time_at(i)), value })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a series under a custom value column name.
pub fn write_named_trace(path: &Path, series: &TimeSeries, column: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["timestamp", column])?;
    for (i, value) in series.values().iter().enumerate() {
        w.write_record([format_timestamp(series.time_at(i)), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a series whose value column is named `column`.
pub fn read_named_trace(path: &Path, column: &str) -> Result<TimeSeries> {
    let mut r = open(path)?;
    let headers = r.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::input(format!("{}: missing column {column:?}", path.display())))?;
    let ts = headers
        .iter()
        .position(|h| h == "timestamp")
        .ok_or_else(|| Error::input(format!("{}: missing column \"timestamp\"", path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        times.push(parse_timestamp(&rec[ts])?);
        values.push(
            rec[idx]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::input(format!("bad {column} value {:?}: {e}", &rec[idx])))?,
        );
    }
    trace_from_samples(&times, values)
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    timestamp: String,
    direction: String,
    count: u32,
}

pub fn read_events(path: &Path) -> Result<Vec<CrossingEvent>> {
    let mut out = Vec::new();
    for row in open(path)?.deserialize::<EventRow>() {
        let row = row?;
        let direction = match row.direction.trim() {
            "in" | "inward" => Direction::Inward,
            "out" | "outward" => Direction::Outward,
            other => return Err(Error::input(format!("bad direction {other:?}"))),
        };
        out.push(CrossingEvent { timestamp: parse_timestamp(&row.timestamp)?, direction, count: row.count });
    }
    Ok(out)
}

pub fn write_events(path: &Path, events: &[CrossingEvent]) -> Result<()> {
    let mut w = create(path)?;
    for e in events {
        let direction = match e.direction {
            Direction::Inward => "in",
            Direction::Outward => "out",
        };
        w.serialize(EventRow {
            timestamp: format_timestamp(e.timestamp),
            direction: direction.into(),
            count: e.count,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    timestamp: String,
}

pub fn read_schedule(path: &Path) -> Result<Vec<i64>> {
    open(path)?
        .deserialize::<ScheduleRow>()
        .map(|row| parse_timestamp(&row?.timestamp))
        .collect()
}

pub fn write_schedule(path: &Path, events: &[i64]) -> Result<()> {
    let mut w = create(path)?;
    for &t in events {
        w.serialize(ScheduleRow { timestamp: format_timestamp(t) })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct HolidayRow {
    date: String,
}

/// Reads `date` rows (`YYYY-MM-DD`) as day indices.
pub fn read_holidays(path: &Path) -> Result<Vec<i64>> {
    open(path)?
        .deserialize::<HolidayRow>()
        .map(|row| {
            let row = row?;
            let date = NaiveDate::parse_from_str(row.date.trim(), "%Y-%m-%d")
                .map_err(|e| Error::input(format!("bad date {:?}: {e}", row.date)))?;
            let t = date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
            Ok(day_index(t))
        })
        .collect()
}

pub fn write_decisions(path: &Path, decisions: &[Decision]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["timestamp", "event", "detail"])?;
    for d in decisions {
        w.write_record([format_timestamp(d.time), d.kind.name().to_string(), d.kind.detail()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes aligned columns sharing one clock.
pub fn write_table(path: &Path, start: i64, step: i64, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["timestamp"];
    header.extend(columns.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    let n = columns.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    for i in 0..n {
        let mut rec = vec![format_timestamp(start + i as i64 * step)];
        rec.extend(columns.iter().map(|(_, c)| c[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

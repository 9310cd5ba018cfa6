//! Lock-step co-simulation protocol: newline-delimited JSON, one message per
//! line, one outstanding step at a time.
//!
//! The controller opens with `init`, then sends `step` requests with strictly
//! increasing indices (from zero); the simulator answers each with exactly one
//! `state`. Either side closes with `end`. Any protocol violation is answered
//! with `error` and the session is closed.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use occmpc_core::closed_loop::{Plant, PlantReply, StepInput, ZonePlant};
use occmpc_core::mpc::SetpointPolicy;
use occmpc_core::{StepMethod, ZoneThermalParams};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Init {
        params: ZoneThermalParams,
        policy: SetpointPolicy,
        initial_temp_c: f64,
        step_s: f64,
        #[serde(default)]
        method: StepMethod,
    },
    Step {
        index: u64,
        setpoint_c: f64,
        outdoor_c: f64,
        humidity_pct: f64,
        occupants: f64,
    },
    State {
        index: u64,
        indoor_c: f64,
        step_energy_wh: f64,
        hvac_on: bool,
    },
    Error {
        code: String,
        text: String,
    },
    End,
}

impl Message {
    fn error(code: &str, text: impl Into<String>) -> Self {
        Self::Error { code: code.into(), text: text.into() }
    }
}

pub fn write_message<W: Write>(writer: &mut W, message: &Message) -> Result<()> {
    let mut line = serde_json::to_string(message)?;
    line.push('\n');
    writer.write_all(line.as_bytes())?;
    writer.flush()?;
    Ok(())
}

/// Reads one message; `None` at end of stream.
pub fn read_message<R: BufRead>(reader: &mut R, line: &mut String) -> Result<Option<Message>> {
    line.clear();
    if reader.read_line(line)? == 0 {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(line.trim_end())?))
}

/// How a simulator session finished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionOutcome {
    /// The peer sent `end`.
    Completed { steps: u64 },
    /// The peer closed the stream without `end`.
    Disconnected { steps: u64 },
    /// A protocol violation was answered with this error code.
    Rejected { code: String },
}

/// Runs one simulator session over a reader/writer pair.
pub fn serve_session<R: BufRead, W: Write>(mut reader: R, mut writer: W) -> Result<SessionOutcome> {
    let mut plant: Option<ZonePlant> = None;
    let mut steps = 0u64;
    let mut line = String::new();
    let reject = |writer: &mut W, code: &str, text: String| -> Result<SessionOutcome> {
        write_message(writer, &Message::error(code, text))?;
        Ok(SessionOutcome::Rejected { code: code.into() })
    };
    loop {
        let message = match read_message(&mut reader, &mut line) {
            Ok(Some(m)) => m,
            Ok(None) => return Ok(SessionOutcome::Disconnected { steps }),
            Err(Error::Json(e)) => return reject(&mut writer, "malformed", e.to_string()),
            Err(e) => return Err(e),
        };
        match message {
            Message::Init { params, initial_temp_c, step_s, method, policy } => {
                if plant.is_some() {
                    return reject(&mut writer, "duplicate_init", "session already initialised".into());
                }
                if let Err(e) = policy.validate() {
                    return reject(&mut writer, "invalid_init", e.to_string());
                }
                if !(step_s > 0.0) {
                    return reject(&mut writer, "invalid_init", format!("step must be positive, got {step_s}"));
                }
                match ZonePlant::new(params, initial_temp_c, step_s, method) {
                    Ok(p) => plant = Some(p),
                    Err(e) => return reject(&mut writer, "invalid_init", e.to_string()),
                }
            }
            Message::Step { index, setpoint_c, outdoor_c, humidity_pct, occupants } => {
                let Some(p) = plant.as_mut() else {
                    return reject(&mut writer, "uninitialized", "step before init".into());
                };
                if index != steps {
                    return reject(
                        &mut writer,
                        "out_of_order",
                        format!("expected step {steps}, got {index}"),
                    );
                }
                let input = StepInput {
                    setpoint: setpoint_c,
                    outdoor: outdoor_c,
                    humidity: humidity_pct,
                    occupants,
                };
                match p.step(index, &input) {
                    Ok(r) => {
                        let reply = Message::State {
                            index,
                            indoor_c: r.indoor_temp,
                            step_energy_wh: r.step_energy_wh,
                            hvac_on: r.hvac_on,
                        };
                        write_message(&mut writer, &reply)?;
                        steps += 1;
                    }
                    Err(e) => return reject(&mut writer, "step_failed", e.to_string()),
                }
            }
            Message::End => return Ok(SessionOutcome::Completed { steps }),
            Message::State { .. } | Message::Error { .. } => {
                return reject(&mut writer, "unexpected", "simulator only accepts init, step and end".into())
            }
        }
    }
}

/// Serves sessions one at a time; stops after `max_sessions` when given.
pub fn serve_tcp(listener: &TcpListener, max_sessions: Option<usize>) -> Result<Vec<SessionOutcome>> {
    let mut outcomes = Vec::new();
    for stream in listener.incoming() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        outcomes.push(serve_session(reader, stream)?);
        if max_sessions.is_some_and(|m| outcomes.len() >= m) {
            break;
        }
    }
    Ok(outcomes)
}

pub fn serve_stdio() -> Result<SessionOutcome> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_session(stdin.lock(), stdout.lock())
}

/// Controller-side handle on a remote simulator.
pub struct RemotePlant<R: BufRead, W: Write> {
    reader: R,
    writer: W,
    line: String,
    closed: bool,
}

impl RemotePlant<BufReader<TcpStream>, TcpStream> {
    pub fn connect<A: ToSocketAddrs>(addr: A, init: &Message) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Self::new(reader, stream, init)
    }
}

impl<R: BufRead, W: Write> RemotePlant<R, W> {
    pub fn new(reader: R, mut writer: W, init: &Message) -> Result<Self> {
        if !matches!(init, Message::Init { .. }) {
            return Err(Error::input("a session must open with init"));
        }
        write_message(&mut writer, init)?;
        Ok(Self { reader, writer, line: String::new(), closed: false })
    }

    /// Sends `end`.
    pub fn finish(mut self) -> Result<()> {
        self.closed = true;
        write_message(&mut self.writer, &Message::End)
    }
}

impl<R: BufRead, W: Write> Plant for RemotePlant<R, W> {
    type Error = Error;

    fn step(&mut self, index: u64, input: &StepInput) -> Result<PlantReply> {
        let request = Message::Step {
            index,
            setpoint_c: input.setpoint,
            outdoor_c: input.outdoor,
            humidity_pct: input.humidity,
            occupants: input.occupants,
        };
        write_message(&mut self.writer, &request)?;
        match read_message(&mut self.reader, &mut self.line)? {
            Some(Message::State { index: i, indoor_c, step_energy_wh, hvac_on }) if i == index => {
                Ok(PlantReply { indoor_temp: indoor_c, step_energy_wh, hvac_on })
            }
            Some(Message::Error { code, text }) => Err(Error::Protocol { code, text }),
            Some(other) => Err(Error::Protocol {
                code: "unexpected".into(),
                text: format!("expected state for step {index}, got {other:?}"),
            }),
            None => Err(Error::Protocol { code: "closed".into(), text: "simulator hung up".into() }),
        }
    }
}

impl<R: BufRead, W: Write> Drop for RemotePlant<R, W> {
    fn drop(&mut self) {
        if !self.closed {
            let _ = write_message(&mut self.writer, &Message::End);
        }
    }
}

pub fn init_message(
    params: ZoneThermalParams,
    policy: SetpointPolicy,
    initial_temp_c: f64,
    step_s: f64,
    method: StepMethod,
) -> Message {
    Message::Init { params, policy, initial_temp_c, step_s, method }
}

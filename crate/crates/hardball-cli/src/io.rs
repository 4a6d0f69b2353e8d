//! File formats: state JSON, event-log JSONL, and the shared value
//! formatting.
//!
//! Writers are hand-rolled line formatters rather than serde serializers:
//! byte-identical reruns are part of the CLI contract, so key order and
//! float formatting are pinned here, not library-dependent. Floats print
//! as decimal with 17 significant digits, which round-trips every f64
//! exactly. Readers go through serde and accept any valid JSON numbers.

use std::path::Path;

use hardball::dynamics::{BallState, SystemState};
use hardball::engine::{CollisionEvent, Termination, Trajectory};
use hardball::vector::Vector;
use hardball::{Error, Result};
use serde::Deserialize;

pub const SCHEMA: u64 = 1;

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON-safe float: non-finite values become null.
pub fn fmt_or_null(x: f64) -> String {
    if x.is_finite() {
        fmt_f(x)
    } else {
        "null".into()
    }
}

pub fn fmt_slice(xs: &[f64]) -> String {
    let inner: Vec<String> = xs.iter().map(|x| fmt_f(*x)).collect();
    format!("[{}]", inner.join(","))
}

pub fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn termination_str(t: Termination) -> &'static str {
    match t {
        Termination::Terminal => "terminal",
        Termination::HorizonReached => "horizon_reached",
        Termination::BudgetExhausted => "budget_exhausted",
    }
}

fn state_fields(state: &SystemState) -> String {
    let balls: Vec<String> = state
        .balls()
        .iter()
        .map(|b| {
            format!(
                "{{\"center\":{},\"velocity\":{}}}",
                fmt_slice(b.center.as_slice()),
                fmt_slice(b.velocity.as_slice())
            )
        })
        .collect();
    format!(
        "\"time\":{},\"dim\":{},\"balls\":[{}]",
        fmt_f(state.time()),
        state.dim(),
        balls.join(",")
    )
}

pub fn state_json(state: &SystemState) -> String {
    format!(
        "{{\"schema\":{SCHEMA},\"kind\":\"hardball-state\",{}}}\n",
        state_fields(state)
    )
}

/// Header line plus one line per collision.
pub fn event_log_text(traj: &Trajectory) -> String {
    let mut out = format!(
        "{{\"schema\":{SCHEMA},\"kind\":\"hardball-events\",\"termination\":\"{}\",\"horizon\":{},\"initial\":{{{}}}}}\n",
        termination_str(traj.termination()),
        traj.horizon().map_or("null".into(), fmt_f),
        state_fields(traj.initial())
    );
    for e in traj.events() {
        out.push_str(&format!(
            "{{\"time\":{},\"pair\":[{},{}],\"contact_axis\":{},\"pre_velocities\":[{},{}],\"post_velocities\":[{},{}]}}\n",
            fmt_f(e.time),
            e.pair.0,
            e.pair.1,
            fmt_slice(e.unit_axis.as_slice()),
            fmt_slice(e.pre_velocities.0.as_slice()),
            fmt_slice(e.pre_velocities.1.as_slice()),
            fmt_slice(e.post_velocities.0.as_slice()),
            fmt_slice(e.post_velocities.1.as_slice()),
        ));
    }
    out
}

#[derive(Deserialize)]
struct RawBall {
    center: Vec<f64>,
    velocity: Vec<f64>,
}

#[derive(Deserialize)]
struct RawState {
    #[serde(default)]
    schema: Option<u64>,
    time: f64,
    dim: usize,
    balls: Vec<RawBall>,
}

#[derive(Deserialize)]
struct RawHeader {
    schema: u64,
    kind: String,
    termination: Termination,
    #[serde(default)]
    horizon: Option<f64>,
    initial: RawState,
}

#[derive(Deserialize)]
struct RawEvent {
    time: f64,
    pair: (usize, usize),
    contact_axis: Vec<f64>,
    pre_velocities: (Vec<f64>, Vec<f64>),
    post_velocities: (Vec<f64>, Vec<f64>),
}

fn to_state(raw: RawState) -> Result<SystemState> {
    if let Some(s) = raw.schema {
        if s != SCHEMA {
            return Err(Error::InvalidInput(format!("unsupported state schema {s}")));
        }
    }
    let balls = raw
        .balls
        .into_iter()
        .map(|b| BallState {
            center: Vector(b.center),
            velocity: Vector(b.velocity),
        })
        .collect();
    SystemState::new(raw.time, raw.dim, balls)
}

pub fn parse_state(text: &str) -> Result<SystemState> {
    let raw: RawState = serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("state parse: {e}")))?;
    to_state(raw)
}

pub struct EventLog {
    pub initial: SystemState,
    pub events: Vec<CollisionEvent>,
    pub termination: Termination,
    pub horizon: Option<f64>,
}

pub fn parse_event_log(text: &str) -> Result<EventLog> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty event log".into()))?;
    let header: RawHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::InvalidInput(format!("event-log header parse: {e}")))?;
    if header.schema != SCHEMA {
        return Err(Error::InvalidInput(format!(
            "unsupported event-log schema {}",
            header.schema
        )));
    }
    if header.kind != "hardball-events" {
        return Err(Error::InvalidInput(format!(
            "unexpected log kind {:?}",
            header.kind
        )));
    }
    let initial = to_state(header.initial)?;
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let raw: RawEvent = serde_json::from_str(line)
            .map_err(|e| Error::InvalidInput(format!("event line {}: {e}", i + 1)))?;
        events.push(CollisionEvent {
            time: raw.time,
            pair: raw.pair,
            unit_axis: Vector(raw.contact_axis),
            pre_velocities: (Vector(raw.pre_velocities.0), Vector(raw.pre_velocities.1)),
            post_velocities: (Vector(raw.post_velocities.0), Vector(raw.post_velocities.1)),
        });
    }
    Ok(EventLog {
        initial,
        events,
        termination: header.termination,
        horizon: header.horizon,
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::InvalidInput(format!("mkdir {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| Error::InvalidInput(format!("write {}: {e}", path.display())))
}

//! Plan traces: the action schedule, the per-tick log, totals, and their
//! text forms — a versioned field-per-line document for the plan itself and
//! a CSV of per-tick samples for plotting.

use std::fmt::Write as _;

use crate::world::Pose;

use super::search::SearchStats;
use super::EngineError;

/// One scheduled action: applied at `time` seconds (a tick boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub time: f64,
    /// Grounded display form, e.g. `goto_waypoint wp_start wp3`.
    pub action: String,
}

/// Per-tick sample of the simulated trajectory.
#[derive(Debug, Clone)]
pub struct TickLog {
    pub clock: f64,
    pub mean: Pose,
    pub trace: f64,
    pub charge: Option<f64>,
}

/// A complete plan: schedule, tick log, totals, and search statistics.
///
/// Wall-clock planning time lives only in [`SearchStats`]; it is never
/// serialized here so that identical runs produce identical bytes.
#[derive(Debug, Clone)]
pub struct PlanTrace {
    /// Tick length the plan was synthesized at.
    pub delta: f64,
    /// Clock of the goal-satisfying state.
    pub end_clock: f64,
    pub steps: Vec<PlanStep>,
    /// Tick samples including the initial state; empty on traces loaded
    /// from disk (the CSV is not read back).
    pub ticks: Vec<TickLog>,
    /// Every event firing as `(clock, event display)`, in order.
    pub fired: Vec<(f64, String)>,
    pub cost: f64,
    pub final_trace: f64,
    pub stats: SearchStats,
    /// Configuration fingerprint stamped into artifacts, when known.
    pub config_tag: Option<String>,
}

impl PlanTrace {
    /// Versioned text form. Deterministic for identical plans.
    pub fn to_text(&self) -> String {
        debug_assert!(self.steps.windows(2).all(|w| w[0].time <= w[1].time));
        let mut out = String::new();
        out.push_str("plan-trace 1\n");
        if let Some(tag) = &self.config_tag {
            let _ = writeln!(out, "config {tag}");
        }
        let _ = writeln!(out, "delta {}", self.delta);
        let _ = writeln!(out, "end {}", self.end_clock);
        let _ = writeln!(out, "cost {}", self.cost);
        let _ = writeln!(out, "final-trace {}", self.final_trace);
        let _ = writeln!(out, "states-explored {}", self.stats.states_explored);
        let _ = writeln!(out, "states-generated {}", self.stats.states_generated);
        let _ = writeln!(out, "peak-open {}", self.stats.peak_open_list);
        for s in &self.steps {
            let _ = writeln!(out, "step {} {}", s.time, s.action);
        }
        for (clock, name) in &self.fired {
            let _ = writeln!(out, "fired {clock} {name}");
        }
        out
    }

    /// Parse the text form back. The per-tick log is not serialized, so
    /// `ticks` comes back empty; planning time comes back zero.
    pub fn parse(text: &str) -> Result<PlanTrace, EngineError> {
        let bad = |line: usize, msg: String| EngineError::TraceParse(format!("line {line}: {msg}"));
        let mut trace = PlanTrace {
            delta: 0.0,
            end_clock: 0.0,
            steps: Vec::new(),
            ticks: Vec::new(),
            fired: Vec::new(),
            cost: 0.0,
            final_trace: 0.0,
            stats: SearchStats::default(),
            config_tag: None,
        };
        let mut saw_magic = false;
        let mut saw_delta = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_magic {
                if line != "plan-trace 1" {
                    return Err(bad(ln, format!("expected 'plan-trace 1', found '{line}'")));
                }
                saw_magic = true;
                continue;
            }
            let (field, rest) = line.split_once(' ').unwrap_or((line, ""));
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| bad(ln, format!("bad number '{s}'")))
            };
            let count = |s: &str| {
                s.parse::<u64>().map_err(|_| bad(ln, format!("bad count '{s}'")))
            };
            match field {
                "config" => trace.config_tag = Some(rest.to_string()),
                "delta" => {
                    trace.delta = num(rest)?;
                    saw_delta = true;
                }
                "end" => trace.end_clock = num(rest)?,
                "cost" => trace.cost = num(rest)?,
                "final-trace" => trace.final_trace = num(rest)?,
                "states-explored" => trace.stats.states_explored = count(rest)?,
                "states-generated" => trace.stats.states_generated = count(rest)?,
                "peak-open" => trace.stats.peak_open_list = count(rest)?,
                "step" => {
                    let (t, action) = rest
                        .split_once(' ')
                        .ok_or_else(|| bad(ln, "step needs a time and an action".into()))?;
                    trace.steps.push(PlanStep { time: num(t)?, action: action.to_string() });
                }
                "fired" => {
                    let (t, name) = rest
                        .split_once(' ')
                        .ok_or_else(|| bad(ln, "fired needs a time and an event".into()))?;
                    trace.fired.push((num(t)?, name.to_string()));
                }
                other => return Err(bad(ln, format!("unknown field '{other}'"))),
            }
        }
        if !saw_magic {
            return Err(EngineError::TraceParse("empty plan trace".into()));
        }
        if !saw_delta || trace.delta <= 0.0 {
            return Err(EngineError::TraceParse("missing or invalid delta".into()));
        }
        Ok(trace)
    }
}

/// Per-tick CSV with the fixed column set `clock,x,y,theta,trace,charge`;
/// the charge cell is empty for domains without a battery.
pub fn write_ticks_csv(trace: &PlanTrace) -> String {
    let mut out = String::new();
    if let Some(tag) = &trace.config_tag {
        let _ = writeln!(out, "# config {tag}");
    }
    out.push_str("clock,x,y,theta,trace,charge\n");
    for t in &trace.ticks {
        let charge = t.charge.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t.clock, t.mean.x, t.mean.y, t.mean.theta, t.trace, charge
        );
    }
    out
}

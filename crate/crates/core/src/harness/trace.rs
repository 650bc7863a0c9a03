use crate::control::TickMode;
use crate::dynamics::{DynamicsError, MotorSpeeds, VehicleState};

/// Plant state at one plant tick and the rotor command held over the
/// following step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub state: VehicleState,
    pub motors: MotorSpeeds,
}

/// One controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandRecord {
    pub t_ns: i64,
    pub speeds: MotorSpeeds,
    pub mode: TickMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    /// Published on the in-process bus.
    Published,
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub at_ns: i64,
    pub kind: LogKind,
    pub frame: Vec<u8>,
}

/// A plant fault that ended the run.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultRecord {
    pub t: f64,
    pub error: DynamicsError,
}

/// Everything recorded during one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub commands: Vec<CommandRecord>,
    pub log: Vec<LogEntry>,
    pub fault: Option<FaultRecord>,
    pub plant_steps: usize,
    pub controller_ticks: usize,
}

impl Trace {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.state.t).collect()
    }

    /// Column by CSV header name, e.g. `"z"` or `"phi"`.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = super::csv::COLUMNS.iter().position(|c| *c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| super::csv::row_values(r)[idx])
                .collect(),
        )
    }

    /// Frames of the given kind, in log order.
    pub fn frames(&self, kind: LogKind) -> impl Iterator<Item = &LogEntry> {
        self.log.iter().filter(move |e| e.kind == kind)
    }
}

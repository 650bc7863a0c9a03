//! Scenario files, experiment runs, step-response metrics and CSV output.

mod csv;
mod metrics;
mod run;
mod scenario;
mod trace;

pub use csv::{emit_csv, read_csv, write_csv, CsvError, COLUMNS};
pub use metrics::{signal_metrics, step_metrics, MetricsError, StepMetrics};
pub use run::{run_scenario, HarnessError, RunOutput};
pub use scenario::{
    parse_scenario, ScenarioConfig, ScenarioError, ScenarioErrorKind, TransportKind,
};
pub use trace::{CommandRecord, FaultRecord, LogEntry, LogKind, Trace, TraceRow};

use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::csv::{emit_csv, CsvError};
use super::scenario::{ScenarioConfig, TransportKind};
use super::trace::Trace;
use crate::control::{ControlError, ControllerConfig, ControllerNode};
use crate::dynamics::VehicleState;
use crate::middleware::{lockstep_run, udp_run, PlantNode, SchedulerError, UdpError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("controller configuration: {0}")]
    Control(#[from] ControlError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Udp(#[from] UdpError),
    #[error(transparent)]
    Csv(#[from] CsvError),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub controller: ControllerConfig,
    pub wall_time: Duration,
    /// Where the CSV went, if anywhere.
    pub csv_path: Option<PathBuf>,
}

impl RunOutput {
    /// The setpoint schedule on the controller's grid.
    pub fn schedule(&self) -> &[(i64, crate::control::Setpoint)] {
        self.controller.schedule.entries()
    }
}

/// Builds both nodes from `cfg`, starting at rest at the origin, and runs
/// them over the configured transport.
///
/// A plant fault is not an error here: the partial trace comes back with
/// `trace.fault` set and is still written to the configured output.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let controller_cfg = cfg.controller_config()?;
    let controller = ControllerNode::new(controller_cfg.clone(), cfg.params)?;
    let mut plant = PlantNode::new(
        cfg.params,
        cfg.model,
        VehicleState::default(),
        cfg.plant_dt(),
    );

    let started = Instant::now();
    let trace = match cfg.transport {
        TransportKind::Lockstep => {
            let mut controller = controller;
            lockstep_run(&cfg.lockstep_config(), &mut plant, &mut controller)?
        }
        TransportKind::Udp => udp_run(&cfg.udp_config(), plant, controller)?,
    };
    let wall_time = started.elapsed();

    let csv_path = match &cfg.output {
        Some(path) if !trace.is_empty() => {
            emit_csv(&trace, path)?;
            Some(path.clone())
        }
        _ => None,
    };
    Ok(RunOutput {
        trace,
        controller: controller_cfg,
        wall_time,
        csv_path,
    })
}

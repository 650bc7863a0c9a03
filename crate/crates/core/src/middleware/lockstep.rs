use thiserror::Error;

use super::{Bus, BusError, PlantNode, Topic};
use crate::control::{ControllerNode, SensorSnapshot};
use crate::harness::{CommandRecord, FaultRecord, LogEntry, LogKind, Trace, TraceRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error(
        "plant rate {plant_hz} Hz is not an integer multiple of controller rate {controller_hz} Hz"
    )]
    RateMismatch { plant_hz: f64, controller_hz: f64 },
    #[error("duration must be finite and non-negative, got {0}")]
    InvalidDuration(f64),
    #[error(transparent)]
    Bus(#[from] BusError),
}

/// Timing of a two-node run on a shared clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockstepConfig {
    pub plant_rate_hz: f64,
    pub controller_rate_hz: f64,
    pub duration_s: f64,
    /// Plant stops publishing from this time on (it keeps integrating).
    pub mute_plant_after_s: Option<f64>,
}

impl Default for LockstepConfig {
    fn default() -> Self {
        Self {
            plant_rate_hz: 100.0,
            controller_rate_hz: 50.0,
            duration_s: 15.0,
            mute_plant_after_s: None,
        }
    }
}

impl LockstepConfig {
    /// Plant ticks per controller tick.
    pub fn ratio(&self) -> Result<u64, SchedulerError> {
        rate_ratio(self.plant_rate_hz, self.controller_rate_hz)
    }

    pub fn plant_period_ns(&self) -> i64 {
        (1e9 / self.plant_rate_hz).round() as i64
    }

    pub fn plant_steps(&self) -> Result<u64, SchedulerError> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(SchedulerError::InvalidDuration(self.duration_s));
        }
        Ok((self.duration_s * self.plant_rate_hz).round() as u64)
    }
}

pub(crate) fn rate_ratio(plant_hz: f64, controller_hz: f64) -> Result<u64, SchedulerError> {
    let mismatch = SchedulerError::RateMismatch {
        plant_hz,
        controller_hz,
    };
    if !(plant_hz > 0.0 && controller_hz > 0.0 && plant_hz.is_finite() && controller_hz.is_finite())
    {
        return Err(mismatch);
    }
    let ratio = plant_hz / controller_hz;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 {
        return Err(mismatch);
    }
    Ok(rounded as u64)
}

/// Runs plant and controller on a virtual clock advancing one plant period
/// per tick. Each tick the plant publishes its state; on every `ratio`-th
/// tick the controller then runs on what it can see; finally the plant
/// adopts the newest command and integrates one step.
///
/// A plant fault ends the run early and is recorded in the trace.
pub fn lockstep_run(
    cfg: &LockstepConfig,
    plant: &mut PlantNode,
    controller: &mut ControllerNode,
) -> Result<Trace, SchedulerError> {
    let ratio = cfg.ratio()?;
    let steps = cfg.plant_steps()?;
    let period = cfg.plant_period_ns();
    let mute_ns = cfg.mute_plant_after_s.map(|s| (s * 1e9).round() as i64);

    let mut bus = Bus::with_drone_topics();
    let imu = bus.subscribe(Topic::Imu)?;
    let pose = bus.subscribe(Topic::Pose)?;
    let velocity = bus.subscribe(Topic::Velocity)?;
    let commands = bus.subscribe(Topic::MotorCommands)?;

    let mut trace = Trace::default();
    if steps == 0 {
        return Ok(trace);
    }
    trace.rows.reserve(steps as usize + 1);

    for k in 0..steps {
        let now = k as i64 * period;
        if mute_ns.is_none_or(|m| now < m) {
            for msg in plant.state_messages(now) {
                bus.publish(msg, now)?;
            }
        }
        if k % ratio == 0 {
            let snapshot = SensorSnapshot::from_subscriptions(&imu, &pose, &velocity);
            let (msg, outcome) = controller.tick(&snapshot, now);
            bus.publish(msg, now)?;
            trace.commands.push(CommandRecord {
                t_ns: now,
                speeds: outcome.speeds,
                mode: outcome.mode,
            });
            trace.controller_ticks += 1;
        }
        plant.apply_command(commands.latest());
        trace.rows.push(TraceRow {
            state: *plant.state(),
            motors: plant.command(),
        });
        if let Err(error) = plant.step() {
            trace.fault = Some(FaultRecord {
                t: plant.state().t,
                error,
            });
            break;
        }
        trace.plant_steps += 1;
    }
    if trace.fault.is_none() {
        trace.rows.push(TraceRow {
            state: *plant.state(),
            motors: plant.command(),
        });
    }
    trace.log = bus
        .take_log()
        .into_iter()
        .map(|(at_ns, frame)| LogEntry {
            at_ns,
            kind: LogKind::Published,
            frame,
        })
        .collect();
    Ok(trace)
}

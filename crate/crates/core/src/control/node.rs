use nalgebra::Vector3;

use super::{
    altitude_thrust, fit_altitude_gains, Allocator, AltitudeGains, AttitudeGains, ControlError,
    LqrWeights, SafetyPolicy, Setpoint,
};
use crate::dynamics::{
    hover_speed, quaternion_to_euler, ControlVector, EulerAngles, MotorSpeeds, QuadParams,
    Quaternion,
};
use crate::middleware::{
    Delivered, MotorCommandPayload, Payload, Publisher, Subscription, Topic, TopicMessage,
};

/// Step changes of the setpoint, each applied from its time onwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetpointSchedule {
    entries: Vec<(i64, Setpoint)>,
}

impl SetpointSchedule {
    /// Builds a schedule from `(seconds, setpoint)` pairs. Application
    /// times are rounded up to the next multiple of `grid_ns`.
    pub fn new(entries: &[(f64, Setpoint)], grid_ns: i64) -> Result<Self, ControlError> {
        if grid_ns <= 0 {
            return Err(ControlError::InvalidConfig(format!(
                "schedule grid {grid_ns} ns"
            )));
        }
        let mut out = Vec::with_capacity(entries.len());
        for (t, sp) in entries {
            sp.validate()?;
            if !(t.is_finite() && *t >= 0.0) {
                return Err(ControlError::InvalidConfig(format!("setpoint time {t}")));
            }
            let ns = (t * 1e9).round() as i64;
            let quantized = (ns + grid_ns - 1).div_euclid(grid_ns) * grid_ns;
            out.push((quantized, *sp));
        }
        // stable: later entries win at equal times
        out.sort_by_key(|(t, _)| *t);
        Ok(Self { entries: out })
    }

    pub fn constant(sp: Setpoint) -> Self {
        Self {
            entries: vec![(0, sp)],
        }
    }

    /// The setpoint in force at `now_ns`; all zeros before the first entry.
    pub fn active(&self, now_ns: i64) -> Setpoint {
        self.entries
            .iter()
            .rev()
            .find(|(t, _)| *t <= now_ns)
            .map(|(_, sp)| *sp)
            .unwrap_or_default()
    }

    pub fn entries(&self) -> &[(i64, Setpoint)] {
        &self.entries
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub rate_hz: f64,
    /// Maximum age of the newest sample on each input topic, s.
    pub staleness_budget_s: f64,
    pub altitude: AltitudeGains,
    pub attitude: AttitudeGains,
    pub schedule: SetpointSchedule,
    pub safety_command: MotorSpeeds,
    /// Thrust ceiling as a multiple of the weight.
    pub thrust_limit: f64,
    /// Rotor speed ceiling as a multiple of the hover speed.
    pub speed_limit: f64,
}

impl ControllerConfig {
    /// 50 Hz, 0.1 s staleness budget, unit LQR weights, altitude gains
    /// fitted to an 18 % / 2.5 s step, hover safety command.
    pub fn for_params(p: &QuadParams) -> Result<Self, ControlError> {
        Ok(Self {
            rate_hz: 50.0,
            staleness_budget_s: 0.1,
            altitude: fit_altitude_gains(0.18, 2.5, p)?,
            attitude: AttitudeGains::synthesize(p, [LqrWeights::default(); 3])?,
            schedule: SetpointSchedule::default(),
            safety_command: SafetyPolicy::Hover.command(p),
            thrust_limit: 2.0,
            speed_limit: 2.0,
        })
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: String| Err(ControlError::InvalidConfig(m));
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return bad(format!("rate {} Hz", self.rate_hz));
        }
        if !(self.staleness_budget_s >= 1.0 / self.rate_hz) {
            return bad(format!(
                "staleness budget {} s is shorter than one period",
                self.staleness_budget_s
            ));
        }
        let g = &self.altitude;
        if !(g.kp > 0.0 && g.kd > 0.0) {
            return bad(format!("altitude gains {g:?}"));
        }
        for c in [self.attitude.roll, self.attitude.pitch, self.attitude.yaw] {
            if !(c.k1 > 0.0 && c.k2 > 0.0) {
                return bad(format!("attitude gains {c:?}"));
            }
        }
        if !self.safety_command.is_valid() {
            return bad(format!("safety command {:?}", self.safety_command));
        }
        if !(self.thrust_limit > 0.0 && self.speed_limit > 0.0) {
            return bad("actuator limits must be positive".into());
        }
        Ok(())
    }

    pub fn period_ns(&self) -> i64 {
        (1e9 / self.rate_hz).round() as i64
    }

    fn staleness_budget_ns(&self) -> i64 {
        (self.staleness_budget_s * 1e9).round() as i64
    }
}

/// A message together with its stamp and receive time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub stamp_ns: i64,
    pub received_ns: i64,
    pub value: T,
}

/// The newest message of each input topic at the time of a tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorSnapshot {
    pub imu: Option<Sample<crate::middleware::ImuPayload>>,
    pub pose: Option<Sample<crate::middleware::PosePayload>>,
    pub velocity: Option<Sample<crate::middleware::TwistPayload>>,
}

impl SensorSnapshot {
    pub fn from_subscriptions(
        imu: &Subscription,
        pose: &Subscription,
        velocity: &Subscription,
    ) -> Self {
        fn sample<T>(d: Option<Delivered>, f: impl Fn(Payload) -> Option<T>) -> Option<Sample<T>> {
            let d = d?;
            Some(Sample {
                stamp_ns: d.message.stamp_ns,
                received_ns: d.received_ns,
                value: f(d.message.payload)?,
            })
        }
        Self {
            imu: sample(imu.latest(), |p| match p {
                Payload::Imu(v) => Some(v),
                _ => None,
            }),
            pose: sample(pose.latest(), |p| match p {
                Payload::Pose(v) => Some(v),
                _ => None,
            }),
            velocity: sample(velocity.latest(), |p| match p {
                Payload::Twist(v) => Some(v),
                _ => None,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyReason {
    Missing(Topic),
    Stale(Topic),
    /// Orientation could not be turned into usable Euler angles.
    BadOrientation,
    TiltGuard,
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickMode {
    Normal,
    Safety(SafetyReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickOutcome {
    pub speeds: MotorSpeeds,
    pub mode: TickMode,
}

/// Body moments `[U2, U3, U4]` from `k1·(angle_des − angle) − k2·rate`.
pub fn attitude_moments(
    att: EulerAngles,
    rates: &Vector3<f64>,
    sp: &Setpoint,
    gains: &AttitudeGains,
) -> Vector3<f64> {
    let (r, p, y) = (&gains.roll, &gains.pitch, &gains.yaw);
    Vector3::new(
        r.k1 * (sp.phi_des - att.phi) - r.k2 * rates.x,
        p.k1 * (sp.theta_des - att.theta) - p.k2 * rates.y,
        y.k1 * (sp.psi_des - att.psi) - y.k2 * rates.z,
    )
}

/// One controller period: safety check on the inputs, attitude moments,
/// altitude thrust, allocation.
pub fn control_loop_tick(
    snapshot: &SensorSnapshot,
    now_ns: i64,
    cfg: &ControllerConfig,
    params: &QuadParams,
) -> TickOutcome {
    let safety = |reason| TickOutcome {
        speeds: cfg.safety_command,
        mode: TickMode::Safety(reason),
    };
    let budget = cfg.staleness_budget_ns();
    let ages = [
        (Topic::Imu, snapshot.imu.map(|s| s.received_ns)),
        (Topic::Pose, snapshot.pose.map(|s| s.received_ns)),
        (Topic::Velocity, snapshot.velocity.map(|s| s.received_ns)),
    ];
    for (topic, received) in ages {
        match received {
            None => return safety(SafetyReason::Missing(topic)),
            Some(r) if now_ns - r > budget => return safety(SafetyReason::Stale(topic)),
            Some(_) => {}
        }
    }
    let (imu, pose, vel) = match (snapshot.imu, snapshot.pose, snapshot.velocity) {
        (Some(i), Some(p), Some(v)) => (i.value, p.value, v.value),
        _ => unreachable!("checked above"),
    };

    let Some(att) =
        Quaternion::from_array(imu.orientation).and_then(|q| quaternion_to_euler(q).ok())
    else {
        return safety(SafetyReason::BadOrientation);
    };
    let rates = Vector3::from(imu.angular_velocity);
    let sp = cfg.schedule.active(now_ns);

    let moments = attitude_moments(att, &rates, &sp, &cfg.attitude);
    let thrust_max = cfg.thrust_limit * params.weight();
    let thrust = match altitude_thrust(
        pose.position[2],
        vel.linear[2],
        att,
        &sp,
        &cfg.altitude,
        params,
        thrust_max,
    ) {
        Ok(u) => u,
        Err(_) => return safety(SafetyReason::TiltGuard),
    };

    let Ok(allocator) = Allocator::new(params, cfg.speed_limit * hover_speed(params)) else {
        return safety(SafetyReason::Config);
    };
    let u = ControlVector::new(thrust, moments.x, moments.y, moments.z);
    TickOutcome {
        speeds: allocator.allocate(&u),
        mode: TickMode::Normal,
    }
}

/// Controller node: configuration, parameters and the motor command
/// publisher. Gains and setpoints can be changed between ticks.
#[derive(Debug, Clone)]
pub struct ControllerNode {
    cfg: ControllerConfig,
    params: QuadParams,
    publisher: Publisher,
}

impl ControllerNode {
    pub fn new(cfg: ControllerConfig, params: QuadParams) -> Result<Self, ControlError> {
        cfg.validate()?;
        params
            .validate()
            .map_err(|e| ControlError::InvalidConfig(e.to_string()))?;
        Allocator::new(&params, cfg.speed_limit * hover_speed(&params))?;
        Ok(Self {
            cfg,
            params,
            publisher: Publisher::new(Topic::MotorCommands),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn params(&self) -> &QuadParams {
        &self.params
    }

    pub fn set_altitude_gains(&mut self, gains: AltitudeGains) -> Result<(), ControlError> {
        let cfg = ControllerConfig {
            altitude: gains,
            ..self.cfg.clone()
        };
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    pub fn set_attitude_gains(&mut self, gains: AttitudeGains) -> Result<(), ControlError> {
        let cfg = ControllerConfig {
            attitude: gains,
            ..self.cfg.clone()
        };
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    pub fn set_schedule(&mut self, schedule: SetpointSchedule) {
        self.cfg.schedule = schedule;
    }

    /// Runs one tick and wraps the result as a `/drone/motor_commands`
    /// message stamped `now_ns`.
    pub fn tick(&mut self, snapshot: &SensorSnapshot, now_ns: i64) -> (TopicMessage, TickOutcome) {
        let outcome = control_loop_tick(snapshot, now_ns, &self.cfg, &self.params);
        let payload = Payload::MotorCommand(MotorCommandPayload {
            speeds: outcome.speeds.0,
        });
        (self.publisher.message(payload, now_ns), outcome)
    }
}

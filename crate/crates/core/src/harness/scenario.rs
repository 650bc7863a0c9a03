//! Scenario files: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! duration_s = 15
//! setpoint.0.t = 0
//! setpoint.0.z_des = 10   # altitude step
//! ```
//!
//! Unknown keys, repeated keys and malformed values are errors carrying the
//! 1-based line number. Keys that are not given keep their defaults.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::control::{
    fit_altitude_gains, AttitudeGains, ChannelGains, ControlError, ControllerConfig, LqrWeights,
    SafetyPolicy, Setpoint, SetpointSchedule,
};
use crate::dynamics::{QuadParams, RotationalModel};
use crate::middleware::{LockstepConfig, UdpConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportKind {
    #[default]
    Lockstep,
    Udp,
}

impl FromStr for TransportKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "lockstep" => Ok(TransportKind::Lockstep),
            "udp" => Ok(TransportKind::Udp),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioErrorKind {
    MissingEquals,
    UnknownKey(String),
    DuplicateKey(String),
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },
    RateRatio {
        plant_hz: String,
        controller_hz: String,
    },
    Invalid {
        key: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ScenarioError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub kind: ScenarioErrorKind,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            ScenarioErrorKind::MissingEquals => write!(f, "expected `key = value`"),
            ScenarioErrorKind::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            ScenarioErrorKind::DuplicateKey(k) => write!(f, "key `{k}` given twice"),
            ScenarioErrorKind::TypeMismatch { key, value, expected } => {
                write!(f, "`{key}` expects {expected}, got `{value}`")
            }
            ScenarioErrorKind::RateRatio { plant_hz, controller_hz } => write!(
                f,
                "plant rate {plant_hz} Hz is not an integer multiple of controller rate {controller_hz} Hz"
            ),
            ScenarioErrorKind::Invalid { key, reason } => write!(f, "`{key}`: {reason}"),
        }
    }
}

/// One experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub plant_rate_hz: f64,
    pub controller_rate_hz: f64,
    pub transport: TransportKind,
    pub plant_addr: SocketAddr,
    pub controller_addr: SocketAddr,
    pub params: QuadParams,
    /// Roll, pitch, yaw.
    pub lqr: [LqrWeights; 3],
    /// Per-channel `(k1, k2)` overrides of the synthesized gains.
    pub attitude_overrides: [(Option<f64>, Option<f64>); 3],
    /// `(kp, kd)` overrides of the fitted altitude gains.
    pub altitude_overrides: (Option<f64>, Option<f64>),
    /// Transient the altitude gains are fitted to: overshoot fraction and
    /// peak time.
    pub altitude_target: (f64, f64),
    /// `(apply time s, setpoint)`.
    pub setpoints: Vec<(f64, Setpoint)>,
    pub model: RotationalModel,
    pub output: Option<PathBuf>,
    pub staleness_budget_s: f64,
    pub safety: SafetyPolicy,
    pub thrust_limit: f64,
    pub speed_limit: f64,
    /// Plant goes silent from this time (lockstep: stops publishing; UDP:
    /// the plant node exits).
    pub mute_plant_after_s: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let lo = |port| SocketAddr::from(([127, 0, 0, 1], port));
        Self {
            duration_s: 15.0,
            plant_rate_hz: 100.0,
            controller_rate_hz: 50.0,
            transport: TransportKind::Lockstep,
            plant_addr: lo(0),
            controller_addr: lo(0),
            params: QuadParams::default(),
            lqr: [LqrWeights::default(); 3],
            attitude_overrides: [(None, None); 3],
            altitude_overrides: (None, None),
            altitude_target: (0.18, 2.5),
            setpoints: Vec::new(),
            model: RotationalModel::Full,
            output: None,
            staleness_budget_s: 0.1,
            safety: SafetyPolicy::Hover,
            thrust_limit: 2.0,
            speed_limit: 2.0,
            mute_plant_after_s: None,
        }
    }
}

impl ScenarioConfig {
    pub fn plant_dt(&self) -> f64 {
        1.0 / self.plant_rate_hz
    }

    pub fn controller_period_ns(&self) -> i64 {
        (1e9 / self.controller_rate_hz).round() as i64
    }

    pub fn attitude_gains(&self) -> Result<AttitudeGains, ControlError> {
        let mut g = AttitudeGains::synthesize(&self.params, self.lqr)?;
        for (gains, (k1, k2)) in [&mut g.roll, &mut g.pitch, &mut g.yaw]
            .into_iter()
            .zip(self.attitude_overrides)
        {
            *gains = ChannelGains {
                k1: k1.unwrap_or(gains.k1),
                k2: k2.unwrap_or(gains.k2),
            };
        }
        Ok(g)
    }

    pub fn controller_config(&self) -> Result<ControllerConfig, ControlError> {
        let mut altitude =
            fit_altitude_gains(self.altitude_target.0, self.altitude_target.1, &self.params)?;
        altitude.kp = self.altitude_overrides.0.unwrap_or(altitude.kp);
        altitude.kd = self.altitude_overrides.1.unwrap_or(altitude.kd);
        let cfg = ControllerConfig {
            rate_hz: self.controller_rate_hz,
            staleness_budget_s: self.staleness_budget_s,
            altitude,
            attitude: self.attitude_gains()?,
            schedule: SetpointSchedule::new(&self.setpoints, self.controller_period_ns())?,
            safety_command: self.safety.command(&self.params),
            thrust_limit: self.thrust_limit,
            speed_limit: self.speed_limit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lockstep_config(&self) -> LockstepConfig {
        LockstepConfig {
            plant_rate_hz: self.plant_rate_hz,
            controller_rate_hz: self.controller_rate_hz,
            duration_s: self.duration_s,
            mute_plant_after_s: self.mute_plant_after_s,
        }
    }

    pub fn udp_config(&self) -> UdpConfig {
        UdpConfig {
            plant_addr: self.plant_addr,
            controller_addr: self.controller_addr,
            plant_rate_hz: self.plant_rate_hz,
            controller_rate_hz: self.controller_rate_hz,
            duration_s: self.duration_s,
            kill_plant_after_s: self.mute_plant_after_s,
        }
    }
}

struct Parser {
    cfg: ScenarioConfig,
    seen: HashMap<String, usize>,
    setpoints: BTreeMap<usize, (Option<f64>, Setpoint)>,
}

fn err(line: usize, kind: ScenarioErrorKind) -> ScenarioError {
    ScenarioError { line, kind }
}

fn parse_value<T: FromStr>(
    line: usize,
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ScenarioError> {
    value.parse().map_err(|_| {
        err(
            line,
            ScenarioErrorKind::TypeMismatch {
                key: key.into(),
                value: value.into(),
                expected,
            },
        )
    })
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    let v: f64 = parse_value(line, key, value, "a number")?;
    if !v.is_finite() {
        return Err(err(
            line,
            ScenarioErrorKind::TypeMismatch {
                key: key.into(),
                value: value.into(),
                expected: "a finite number",
            },
        ));
    }
    Ok(v)
}

fn channel_index(name: &str) -> Option<usize> {
    ["roll", "pitch", "yaw"].iter().position(|c| *c == name)
}

impl Parser {
    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ScenarioError> {
        let unknown = || err(line, ScenarioErrorKind::UnknownKey(key.into()));
        let num = || number(line, key, value);
        let c = &mut self.cfg;
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["duration_s"] => c.duration_s = num()?,
            ["plant_rate_hz"] => c.plant_rate_hz = num()?,
            ["controller_rate_hz"] => c.controller_rate_hz = num()?,
            ["transport"] => c.transport = parse_value(line, key, value, "`lockstep` or `udp`")?,
            ["udp", "plant_addr"] => {
                c.plant_addr = parse_value(line, key, value, "a socket address")?
            }
            ["udp", "controller_addr"] => {
                c.controller_addr = parse_value(line, key, value, "a socket address")?
            }
            ["model"] => {
                c.model = match value {
                    "full" => RotationalModel::Full,
                    "decoupled" => RotationalModel::Decoupled,
                    _ => {
                        return Err(err(
                            line,
                            ScenarioErrorKind::TypeMismatch {
                                key: key.into(),
                                value: value.into(),
                                expected: "`full` or `decoupled`",
                            },
                        ))
                    }
                }
            }
            ["output"] => c.output = Some(PathBuf::from(value)),
            ["params", field] => {
                let v = num()?;
                let p = &mut c.params;
                match *field {
                    "mass" => p.mass = v,
                    "gravity" => p.gravity = v,
                    "ixx" => p.ixx = v,
                    "iyy" => p.iyy = v,
                    "izz" => p.izz = v,
                    "arm_length" => p.arm_length = v,
                    "thrust_coeff" => p.thrust_coeff = v,
                    "torque_coeff" => p.torque_coeff = v,
                    _ => return Err(unknown()),
                }
            }
            ["lqr", channel, field] => {
                let i = channel_index(channel).ok_or_else(unknown)?;
                let v = num()?;
                match *field {
                    "q1" => c.lqr[i].q1 = v,
                    "q2" => c.lqr[i].q2 = v,
                    "r" => c.lqr[i].r = v,
                    _ => return Err(unknown()),
                }
            }
            ["gains", "altitude", field] => {
                let v = num()?;
                match *field {
                    "kp" => c.altitude_overrides.0 = Some(v),
                    "kd" => c.altitude_overrides.1 = Some(v),
                    _ => return Err(unknown()),
                }
            }
            ["gains", channel, field] => {
                let i = channel_index(channel).ok_or_else(unknown)?;
                let v = num()?;
                match *field {
                    "k1" => c.attitude_overrides[i].0 = Some(v),
                    "k2" => c.attitude_overrides[i].1 = Some(v),
                    _ => return Err(unknown()),
                }
            }
            ["altitude", "target_overshoot"] => c.altitude_target.0 = num()?,
            ["altitude", "target_peak_time_s"] => c.altitude_target.1 = num()?,
            ["controller", "staleness_budget_s"] => c.staleness_budget_s = num()?,
            ["controller", "safety"] => {
                c.safety = match value {
                    "hover" => SafetyPolicy::Hover,
                    "zero" => SafetyPolicy::Zero,
                    _ => {
                        return Err(err(
                            line,
                            ScenarioErrorKind::TypeMismatch {
                                key: key.into(),
                                value: value.into(),
                                expected: "`hover` or `zero`",
                            },
                        ))
                    }
                }
            }
            ["limits", "thrust_factor"] => c.thrust_limit = num()?,
            ["limits", "speed_factor"] => c.speed_limit = num()?,
            ["fault", "mute_plant_after_s"] => c.mute_plant_after_s = Some(num()?),
            ["setpoint", index, field] => {
                let idx: usize = index.parse().map_err(|_| unknown())?;
                let v = num()?;
                let entry = self.setpoints.entry(idx).or_default();
                match *field {
                    "t" => entry.0 = Some(v),
                    "z_des" => entry.1.z_des = v,
                    "phi_des" => entry.1.phi_des = v,
                    "theta_des" => entry.1.theta_des = v,
                    "psi_des" => entry.1.psi_des = v,
                    _ => return Err(unknown()),
                }
            }
            _ => return Err(unknown()),
        }
        Ok(())
    }

    fn line_of(&self, key: &str) -> usize {
        self.seen.get(key).copied().unwrap_or(0)
    }

    fn finish(mut self) -> Result<ScenarioConfig, ScenarioError> {
        let invalid = |line, key: &str, reason: String| {
            err(
                line,
                ScenarioErrorKind::Invalid {
                    key: key.into(),
                    reason,
                },
            )
        };
        let c = &self.cfg;
        if !(c.duration_s > 0.0) {
            return Err(invalid(
                self.line_of("duration_s"),
                "duration_s",
                "must be positive".into(),
            ));
        }
        if c.lockstep_config().ratio().is_err() {
            let line = self
                .line_of("plant_rate_hz")
                .max(self.line_of("controller_rate_hz"));
            return Err(err(
                line,
                ScenarioErrorKind::RateRatio {
                    plant_hz: c.plant_rate_hz.to_string(),
                    controller_hz: c.controller_rate_hz.to_string(),
                },
            ));
        }
        if let Err(e) = c.params.validate() {
            let key = self
                .seen
                .keys()
                .filter(|k| k.starts_with("params."))
                .max_by_key(|k| self.seen[*k]);
            let key = key.cloned().unwrap_or_else(|| "params".into());
            return Err(invalid(self.line_of(&key), &key, e.to_string()));
        }
        for (i, w) in c.lqr.iter().enumerate() {
            if let Err(e) = w.validate() {
                let key = format!("lqr.{}", ["roll", "pitch", "yaw"][i]);
                let line = ["q1", "q2", "r"]
                    .iter()
                    .map(|f| self.line_of(&format!("{key}.{f}")))
                    .max()
                    .unwrap_or(0);
                return Err(invalid(line, &key, e.to_string()));
            }
        }
        let mut setpoints = Vec::with_capacity(self.setpoints.len());
        for (idx, (t, sp)) in &self.setpoints {
            let key = format!("setpoint.{idx}");
            let line = ["t", "z_des", "phi_des", "theta_des", "psi_des"]
                .iter()
                .map(|f| self.line_of(&format!("{key}.{f}")))
                .max()
                .unwrap_or(0);
            if let Err(e) = sp.validate() {
                return Err(invalid(line, &key, e.to_string()));
            }
            let t = t.unwrap_or(0.0);
            if t < 0.0 {
                return Err(invalid(
                    line,
                    &format!("{key}.t"),
                    "must be non-negative".into(),
                ));
            }
            setpoints.push((t, *sp));
        }
        self.cfg.setpoints = setpoints;
        if let Err(e) = self.cfg.controller_config() {
            return Err(invalid(0, "controller", e.to_string()));
        }
        Ok(self.cfg)
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut parser = Parser {
        cfg: ScenarioConfig::default(),
        seen: HashMap::new(),
        setpoints: BTreeMap::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(err(line, ScenarioErrorKind::MissingEquals))?;
        let (key, value) = (key.trim(), value.trim());
        if parser.seen.contains_key(key) {
            return Err(err(line, ScenarioErrorKind::DuplicateKey(key.into())));
        }
        parser.set(line, key, value)?;
        parser.seen.insert(key.to_string(), line);
    }
    parser.finish()
}

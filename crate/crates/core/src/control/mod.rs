//! Gain synthesis and the controller node.
//!
//! Attitude channels use LQR gains applied as `U = k1·e − k2·rate`;
//! altitude uses PD feedback on top of a gravity feedforward with tilt
//! compensation. The node tick turns the newest sensor samples into four
//! rotor speed commands, or into the configured safety command when the
//! inputs are missing or stale.

mod allocation;
mod altitude;
mod lqr;
mod node;

pub use allocation::{allocate_motors, Allocator};
pub use altitude::{altitude_thrust, fit_altitude_gains};
pub use lqr::{
    care_residual, channel_model, closed_form_channel_gains, solve_care, solve_channel_are,
    CareSolution,
};
pub use node::{
    attitude_moments, control_loop_tick, ControllerConfig, ControllerNode, SafetyReason, Sample,
    SensorSnapshot, SetpointSchedule, TickMode, TickOutcome,
};

use thiserror::Error;

use crate::dynamics::{hover_speed, QuadParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid LQR weights (q1 > 0, q2 >= 0, r > 0 required): {0:?}")]
    InvalidWeights(LqrWeights),
    #[error("inertia must be positive, got {0}")]
    InvalidInertia(f64),
    #[error("Riccati iteration did not converge after {iterations} iterations")]
    AreNonConvergence { iterations: usize },
    #[error("Riccati iteration left the stabilizing set")]
    AreNotStabilizing,
    #[error("tilt guard: cos(theta)·cos(phi) = {0} is at or below 0.2")]
    TiltGuard(f64),
    #[error("mixing matrix is singular")]
    SingularMixer,
    #[error("fit target out of range: overshoot {overshoot}, peak time {peak_time}")]
    InvalidFitTarget { overshoot: f64, peak_time: f64 },
    #[error("setpoint roll/pitch must be below 0.5 rad: {0:?}")]
    InvalidSetpoint(Setpoint),
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
}

/// Quadratic cost weights for one attitude channel: `q1` on the angle
/// error, `q2` on the rate, `r` on the moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrWeights {
    pub q1: f64,
    pub q2: f64,
    pub r: f64,
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q1: 1.0,
            q2: 1.0,
            r: 1.0,
        }
    }
}

impl LqrWeights {
    pub fn validate(&self) -> Result<(), ControlError> {
        let ok = self.q1 > 0.0 && self.q2 >= 0.0 && self.r > 0.0;
        let finite = self.q1.is_finite() && self.q2.is_finite() && self.r.is_finite();
        if ok && finite {
            Ok(())
        } else {
            Err(ControlError::InvalidWeights(*self))
        }
    }
}

/// Error and rate gains of one attitude channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub k1: f64,
    pub k2: f64,
}

impl ChannelGains {
    /// True when `s² + (k2/I)s + k1/I` has both roots in the open left
    /// half-plane.
    pub fn is_hurwitz(&self, inertia: f64) -> bool {
        self.k1 > 0.0 && self.k2 > 0.0 && inertia > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeGains {
    pub roll: ChannelGains,
    pub pitch: ChannelGains,
    pub yaw: ChannelGains,
}

impl AttitudeGains {
    /// LQR synthesis for the three channels of `p`.
    pub fn synthesize(p: &QuadParams, weights: [LqrWeights; 3]) -> Result<Self, ControlError> {
        Ok(Self {
            roll: solve_channel_are(p.ixx, &weights[0])?,
            pitch: solve_channel_are(p.iyy, &weights[1])?,
            yaw: solve_channel_are(p.izz, &weights[2])?,
        })
    }
}

/// PD gains of the altitude channel, N/m and N·s/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeGains {
    pub kp: f64,
    pub kd: f64,
}

/// Desired altitude (m) and attitude (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setpoint {
    pub z_des: f64,
    pub phi_des: f64,
    pub theta_des: f64,
    pub psi_des: f64,
}

impl Setpoint {
    pub const MAX_TILT: f64 = 0.5;

    pub fn validate(&self) -> Result<(), ControlError> {
        let finite = [self.z_des, self.phi_des, self.theta_des, self.psi_des]
            .iter()
            .all(|v| v.is_finite());
        if finite && self.phi_des.abs() < Self::MAX_TILT && self.theta_des.abs() < Self::MAX_TILT {
            Ok(())
        } else {
            Err(ControlError::InvalidSetpoint(*self))
        }
    }
}

/// Rotor command used when the controller cannot act on fresh data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SafetyPolicy {
    /// Four hover speeds: thrust ≈ weight, zero moments.
    #[default]
    Hover,
    /// Motors off.
    Zero,
}

impl SafetyPolicy {
    pub fn command(&self, p: &QuadParams) -> crate::dynamics::MotorSpeeds {
        match self {
            SafetyPolicy::Hover => crate::dynamics::MotorSpeeds::uniform(hover_speed(p)),
            SafetyPolicy::Zero => crate::dynamics::MotorSpeeds::ZERO,
        }
    }
}

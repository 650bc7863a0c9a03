use std::f64::consts::PI;

use super::{AltitudeGains, ControlError, Setpoint};
use crate::dynamics::{EulerAngles, QuadParams};

const MIN_TILT_COSINE: f64 = 0.2;

/// Total thrust from gravity feedforward plus PD feedback, divided by
/// `cos θ·cos φ` and clamped to `[0, thrust_max]`.
pub fn altitude_thrust(
    z: f64,
    zdot: f64,
    att: EulerAngles,
    sp: &Setpoint,
    gains: &AltitudeGains,
    p: &QuadParams,
    thrust_max: f64,
) -> Result<f64, ControlError> {
    let tilt = att.theta.cos() * att.phi.cos();
    if !(tilt > MIN_TILT_COSINE) {
        return Err(ControlError::TiltGuard(tilt));
    }
    let u = (p.weight() + gains.kp * (sp.z_des - z) - gains.kd * zdot) / tilt;
    Ok(u.clamp(0.0, thrust_max))
}

/// PD gains whose linearized closed loop `m·z̈ = kp·e − kd·ż` has the given
/// fractional overshoot and peak time.
pub fn fit_altitude_gains(
    overshoot: f64,
    peak_time: f64,
    p: &QuadParams,
) -> Result<AltitudeGains, ControlError> {
    let in_range = overshoot > 0.0 && overshoot < 1.0 && peak_time > 0.0 && peak_time.is_finite();
    if !in_range {
        return Err(ControlError::InvalidFitTarget {
            overshoot,
            peak_time,
        });
    }
    let ln_mp = overshoot.ln();
    let zeta = -ln_mp / (PI * PI + ln_mp * ln_mp).sqrt();
    let wn = PI / (peak_time * (1.0 - zeta * zeta).sqrt());
    Ok(AltitudeGains {
        kp: p.mass * wn * wn,
        kd: 2.0 * p.mass * zeta * wn,
    })
}

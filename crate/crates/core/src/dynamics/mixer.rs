use nalgebra::{Matrix4, Vector4};

use super::QuadParams;

/// Rotor angular velocities ω₁..ω₄ in rad/s. Rotor 1 is on the nose
/// (+x body), rotor 4 on the left (+y body).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorSpeeds(pub [f64; 4]);

impl MotorSpeeds {
    pub const ZERO: MotorSpeeds = MotorSpeeds([0.0; 4]);

    pub fn uniform(w: f64) -> Self {
        Self([w; 4])
    }

    pub fn squared(&self) -> Vector4<f64> {
        Vector4::from_fn(|i, _| self.0[i] * self.0[i])
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// Total thrust and body moments produced by the rotors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlVector {
    /// U1, N
    pub thrust: f64,
    /// U2, N·m
    pub roll: f64,
    /// U3, N·m
    pub pitch: f64,
    /// U4, N·m
    pub yaw: f64,
}

impl ControlVector {
    pub const fn new(thrust: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            thrust,
            roll,
            pitch,
            yaw,
        }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.thrust, self.roll, self.pitch, self.yaw)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Maps squared rotor speeds to `[U1, U2, U3, U4]`.
pub fn mixing_matrix(p: &QuadParams) -> Matrix4<f64> {
    let kf = p.thrust_coeff;
    let km = p.torque_coeff;
    let lk = p.arm_length * kf;
    Matrix4::new(
        kf, kf, kf, kf, //
        0.0, -lk, 0.0, lk, //
        -lk, 0.0, lk, 0.0, //
        km, -km, km, -km,
    )
}

pub fn mix_forward(w: &MotorSpeeds, p: &QuadParams) -> ControlVector {
    ControlVector::from_vector(&(mixing_matrix(p) * w.squared()))
}

/// Equal rotor speed whose total thrust balances the weight.
pub fn hover_speed(p: &QuadParams) -> f64 {
    (p.weight() / (4.0 * p.thrust_coeff)).sqrt()
}

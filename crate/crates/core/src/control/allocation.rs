use nalgebra::Matrix4;

use super::ControlError;
use crate::dynamics::{hover_speed, mixing_matrix, ControlVector, MotorSpeeds, QuadParams};

/// Inverse of the mixing matrix plus a per-rotor speed ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocator {
    inverse: Matrix4<f64>,
    max_speed: f64,
}

impl Allocator {
    pub fn new(p: &QuadParams, max_speed: f64) -> Result<Self, ControlError> {
        let inverse = mixing_matrix(p)
            .try_inverse()
            .ok_or(ControlError::SingularMixer)?;
        if !inverse.iter().all(|v| v.is_finite()) {
            return Err(ControlError::SingularMixer);
        }
        if !(max_speed > 0.0) {
            return Err(ControlError::InvalidConfig(format!(
                "max rotor speed {max_speed}"
            )));
        }
        Ok(Self { inverse, max_speed })
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Squared speeds `M⁻¹U`, negative entries clamped to zero, square
    /// roots clamped to the ceiling.
    pub fn allocate(&self, u: &ControlVector) -> MotorSpeeds {
        let sq = self.inverse * u.to_vector();
        MotorSpeeds(std::array::from_fn(|i| {
            sq[i].max(0.0).sqrt().min(self.max_speed)
        }))
    }
}

/// Allocation with the default ceiling of twice the hover speed.
pub fn allocate_motors(u: &ControlVector, p: &QuadParams) -> Result<MotorSpeeds, ControlError> {
    Ok(Allocator::new(p, 2.0 * hover_speed(p))?.allocate(u))
}

use super::DynamicsError;

/// Physical constants of the vehicle.
///
/// `thrust_coeff` and `torque_coeff` play the role of both the per-rotor
/// thrust/torque coefficients and the mixing-matrix entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// kg
    pub mass: f64,
    /// m/s²
    pub gravity: f64,
    /// kg·m²
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    /// Rotor-to-CoM distance, m.
    pub arm_length: f64,
    /// N·s²/rad²
    pub thrust_coeff: f64,
    /// N·m·s²/rad²
    pub torque_coeff: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 1.96,
            gravity: 9.81,
            ixx: 0.0149,
            iyy: 0.0153,
            izz: 0.0532,
            arm_length: 0.59,
            thrust_coeff: 2.06e-7,
            torque_coeff: 1.01e-10,
        }
    }
}

impl QuadParams {
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn inertia(&self) -> [f64; 3] {
        [self.ixx, self.iyy, self.izz]
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("ixx", self.ixx),
            ("iyy", self.iyy),
            ("izz", self.izz),
            ("arm_length", self.arm_length),
            ("thrust_coeff", self.thrust_coeff),
            ("torque_coeff", self.torque_coeff),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

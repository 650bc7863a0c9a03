use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix3;

use super::DynamicsError;

/// Largest pitch magnitude the Euler-angle state may reach before the run
/// is terminated.
pub const GIMBAL_LIMIT: f64 = FRAC_PI_2 - 1e-6;

/// Largest |sin θ| accepted when extracting Euler angles from a quaternion.
const SIN_PITCH_LIMIT: f64 = 1.0 - 1e-9;

/// Roll, pitch, yaw in radians, Z-Y-X sequence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub const fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn check_gimbal(&self) -> Result<(), DynamicsError> {
        if self.theta.abs() >= GIMBAL_LIMIT || self.theta.is_nan() {
            Err(DynamicsError::GimbalLock { theta: self.theta })
        } else {
            Ok(())
        }
    }
}

/// Unit quaternion, scalar first. Rotates body-frame vectors into the
/// earth frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes the given components. Returns `None` for a zero or
    /// non-finite norm.
    pub fn try_new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub fn from_array(c: [f64; 4]) -> Option<Self> {
        Self::try_new(c[0], c[1], c[2], c[3])
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Flips the sign so that `w >= 0`.
    pub fn canonical(self) -> Self {
        if self.w < 0.0 {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }

    /// Body-to-earth rotation matrix. Equals the transpose of
    /// [`rotation_enu_to_body`] for the same attitude.
    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let Self { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

/// Earth (ENU) to body rotation for a Z-Y-X Euler sequence.
pub fn rotation_enu_to_body(att: EulerAngles) -> Result<Matrix3<f64>, DynamicsError> {
    att.check_gimbal()?;
    let (sp, cp) = att.phi.sin_cos();
    let (st, ct) = att.theta.sin_cos();
    let (ss, cs) = att.psi.sin_cos();
    Ok(Matrix3::new(
        ct * cs,
        ct * ss,
        -st,
        sp * st * cs - cp * ss,
        sp * st * ss + cp * cs,
        sp * ct,
        cp * st * cs + sp * ss,
        cp * st * ss - sp * cs,
        cp * ct,
    ))
}

/// Yaw-pitch-roll composition `q = q_z(ψ) ⊗ q_y(θ) ⊗ q_x(φ)`, returned with
/// `w >= 0`.
pub fn euler_to_quaternion(att: EulerAngles) -> Quaternion {
    let (sr, cr) = (0.5 * att.phi).sin_cos();
    let (sp, cp) = (0.5 * att.theta).sin_cos();
    let (sy, cy) = (0.5 * att.psi).sin_cos();
    let q = Quaternion::try_new(
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    )
    .expect("half-angle products have unit norm");
    q.canonical()
}

pub fn quaternion_to_euler(q: Quaternion) -> Result<EulerAngles, DynamicsError> {
    let Quaternion { w, x, y, z } = q;
    let sin_theta = 2.0 * (w * y - z * x);
    if sin_theta.abs() > SIN_PITCH_LIMIT {
        return Err(DynamicsError::GimbalLock {
            theta: sin_theta.clamp(-1.0, 1.0).asin(),
        });
    }
    Ok(EulerAngles {
        phi: (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y)),
        theta: sin_theta.asin(),
        psi: (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z)),
    })
}

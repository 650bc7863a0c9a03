//! Vehicle physics: parameters, frames, mixing and equations of motion.

mod attitude;
mod integrator;
mod mixer;
mod model;
mod params;

pub use attitude::{
    euler_to_quaternion, quaternion_to_euler, rotation_enu_to_body, EulerAngles, Quaternion,
    GIMBAL_LIMIT,
};
pub use integrator::rk4_step;
pub use mixer::{hover_speed, mix_forward, mixing_matrix, ControlVector, MotorSpeeds};
pub use model::{
    plant_step, plant_step_driven, rotational_accel, state_derivative, translational_accel,
    RotationalModel, StateVector, VehicleState,
};
pub use params::QuadParams;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("gimbal lock: |pitch| = {theta} rad reached the limit")]
    GimbalLock { theta: f64 },
    #[error("non-finite plant state at t = {:.6} s: {state:?}", state.t)]
    NonFinite { state: Box<VehicleState> },
    #[error("invalid parameter {name} = {value}: must be strictly positive and finite")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

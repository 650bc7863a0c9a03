//! Quadrotor software-in-the-loop co-simulation.
//!
//! The crate is split along the data flow of a closed loop:
//!
//! * [`dynamics`] holds the vehicle physics: parameters, attitude
//!   representations, the rotor mixing model and the 6-DOF equations of
//!   motion with a fixed-step RK4 integrator.
//! * [`control`] synthesizes gains (LQR per attitude channel, PD with
//!   gravity feedforward for altitude) and implements the controller node's
//!   periodic tick, including the stale-sensor safety branch and motor
//!   allocation.
//! * [`middleware`] is the topic bus between the plant and the controller:
//!   a bit-exact wire codec, keep-last-1 subscriptions, a deterministic
//!   lockstep scheduler and a UDP transport.
//! * [`harness`] parses scenario files, runs experiments, extracts step
//!   response metrics and writes CSV traces.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod dynamics;
pub mod harness;
pub mod middleware;

pub use control::{
    AltitudeGains, AttitudeGains, ChannelGains, ControlError, ControllerConfig, LqrWeights,
    Setpoint,
};
pub use dynamics::{
    ControlVector, DynamicsError, EulerAngles, MotorSpeeds, QuadParams, Quaternion,
    RotationalModel, VehicleState,
};
pub use harness::{ScenarioConfig, StepMetrics, Trace};
pub use middleware::{Payload, Topic, TopicMessage};

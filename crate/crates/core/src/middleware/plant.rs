use super::{
    Delivered, ImuPayload, Payload, PosePayload, Publisher, Topic, TopicMessage, TwistPayload,
};
use crate::dynamics::{
    euler_to_quaternion, plant_step, DynamicsError, MotorSpeeds, QuadParams, RotationalModel,
    VehicleState,
};

/// The simulated vehicle as a bus participant: integrates the dynamics at a
/// fixed step and publishes pose, velocity and IMU messages.
#[derive(Debug, Clone)]
pub struct PlantNode {
    params: QuadParams,
    model: RotationalModel,
    dt: f64,
    steps: u64,
    state: VehicleState,
    command: MotorSpeeds,
    last_command_seq: Option<u64>,
    pose: Publisher,
    velocity: Publisher,
    imu: Publisher,
}

impl PlantNode {
    pub fn new(params: QuadParams, model: RotationalModel, initial: VehicleState, dt: f64) -> Self {
        Self {
            params,
            model,
            dt,
            steps: 0,
            state: VehicleState { t: 0.0, ..initial },
            command: MotorSpeeds::ZERO,
            last_command_seq: None,
            pose: Publisher::new(Topic::Pose),
            velocity: Publisher::new(Topic::Velocity),
            imu: Publisher::new(Topic::Imu),
        }
    }

    pub fn state(&self) -> &VehicleState {
        &self.state
    }

    pub fn command(&self) -> MotorSpeeds {
        self.command
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_command(&mut self, w: MotorSpeeds) {
        self.command = w;
    }

    /// Adopts the newest motor command if it is new and well-formed.
    pub fn apply_command(&mut self, latest: Option<Delivered>) {
        let Some(d) = latest else { return };
        if self.last_command_seq == Some(d.message.seq) {
            return;
        }
        if let Payload::MotorCommand(c) = d.message.payload {
            let w = MotorSpeeds(c.speeds);
            if w.is_valid() {
                self.command = w;
                self.last_command_seq = Some(d.message.seq);
            }
        }
    }

    /// Pose, velocity and IMU messages for the current state.
    pub fn state_messages(&mut self, stamp_ns: i64) -> [TopicMessage; 3] {
        let s = &self.state;
        let q = euler_to_quaternion(s.attitude).to_array();
        let rates = [s.body_rates.x, s.body_rates.y, s.body_rates.z];
        let pose = PosePayload {
            position: [s.position.x, s.position.y, s.position.z],
            orientation: q,
        };
        let twist = TwistPayload {
            linear: [s.velocity.x, s.velocity.y, s.velocity.z],
            angular: rates,
        };
        let imu = ImuPayload {
            orientation: q,
            angular_velocity: rates,
        };
        [
            self.pose.message(Payload::Pose(pose), stamp_ns),
            self.velocity.message(Payload::Twist(twist), stamp_ns),
            self.imu.message(Payload::Imu(imu), stamp_ns),
        ]
    }

    /// One integration step with the held command. On error the state is
    /// left unchanged.
    pub fn step(&mut self) -> Result<&VehicleState, DynamicsError> {
        let mut next = plant_step(
            &self.state,
            &self.command,
            &self.params,
            self.dt,
            self.model,
        )?;
        self.steps += 1;
        // time from the step count, so long runs do not accumulate rounding
        next.t = self.steps as f64 * self.dt;
        self.state = next;
        Ok(&self.state)
    }
}

//! Topic bus connecting the plant node and the controller node.
//!
//! Four topics exist, each with one fixed payload type. Messages carry a
//! per-publisher sequence number and a nanosecond stamp. Subscriptions keep
//! only the newest message (depth 1). Two transports move frames: a
//! deterministic in-process lockstep scheduler and a UDP transport with one
//! frame per datagram.

mod bus;
mod codec;
mod lockstep;
mod plant;
mod udp;

pub use bus::{Bus, BusError, Delivered, Publisher, Slot, Subscription};
pub use codec::{decode_frame, encode_frame, DecodeError, EncodeError, HEADER_LEN, MAGIC, VERSION};
pub use lockstep::{lockstep_run, LockstepConfig, SchedulerError};
pub use plant::PlantNode;
pub use udp::{
    run_controller_udp, run_plant_udp, udp_run, UdpConfig, UdpError, MAX_DATAGRAM_PAYLOAD,
};

use std::fmt;

/// Named topics and their wire ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    MotorCommands = 1,
    Pose = 2,
    Velocity = 3,
    Imu = 4,
}

impl Topic {
    pub const ALL: [Topic; 4] = [
        Topic::MotorCommands,
        Topic::Pose,
        Topic::Velocity,
        Topic::Imu,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Topic::MotorCommands => "/drone/motor_commands",
            Topic::Pose => "/drone/Pose",
            Topic::Velocity => "/drone/Velocity",
            Topic::Imu => "/drone/Imu",
        }
    }

    pub fn from_name(name: &str) -> Option<Topic> {
        Topic::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Encoded payload size in bytes.
    pub fn payload_len(self) -> usize {
        8 * match self {
            Topic::MotorCommands => 4,
            Topic::Pose | Topic::Imu => 7,
            Topic::Velocity => 6,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize - 1
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Position (ENU, m) and orientation quaternion (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PosePayload {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

/// Linear velocity (earth frame, m/s) and body rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwistPayload {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
}

/// Orientation quaternion (w, x, y, z) and body rates p, q, r.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuPayload {
    pub orientation: [f64; 4],
    pub angular_velocity: [f64; 3],
}

/// Rotor speed commands, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorCommandPayload {
    pub speeds: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    MotorCommand(MotorCommandPayload),
    Pose(PosePayload),
    Twist(TwistPayload),
    Imu(ImuPayload),
}

impl Payload {
    /// The topic this payload type is registered on.
    pub fn topic(&self) -> Topic {
        match self {
            Payload::MotorCommand(_) => Topic::MotorCommands,
            Payload::Pose(_) => Topic::Pose,
            Payload::Twist(_) => Topic::Velocity,
            Payload::Imu(_) => Topic::Imu,
        }
    }

    pub(crate) fn fields(&self) -> Vec<f64> {
        match self {
            Payload::MotorCommand(m) => m.speeds.to_vec(),
            Payload::Pose(p) => p.position.iter().chain(&p.orientation).copied().collect(),
            Payload::Twist(t) => t.linear.iter().chain(&t.angular).copied().collect(),
            Payload::Imu(i) => i
                .orientation
                .iter()
                .chain(&i.angular_velocity)
                .copied()
                .collect(),
        }
    }

    pub(crate) fn from_fields(topic: Topic, f: &[f64]) -> Payload {
        let arr = |r: std::ops::Range<usize>| -> Vec<f64> { f[r].to_vec() };
        match topic {
            Topic::MotorCommands => Payload::MotorCommand(MotorCommandPayload {
                speeds: arr(0..4).try_into().unwrap(),
            }),
            Topic::Pose => Payload::Pose(PosePayload {
                position: arr(0..3).try_into().unwrap(),
                orientation: arr(3..7).try_into().unwrap(),
            }),
            Topic::Velocity => Payload::Twist(TwistPayload {
                linear: arr(0..3).try_into().unwrap(),
                angular: arr(3..6).try_into().unwrap(),
            }),
            Topic::Imu => Payload::Imu(ImuPayload {
                orientation: arr(0..4).try_into().unwrap(),
                angular_velocity: arr(4..7).try_into().unwrap(),
            }),
        }
    }
}

/// A message on a named topic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicMessage {
    pub topic: Topic,
    pub seq: u64,
    /// Nanoseconds: simulation time in lockstep mode, monotonic wall time
    /// in UDP mode.
    pub stamp_ns: i64,
    pub payload: Payload,
}

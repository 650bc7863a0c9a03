use std::net::UdpSocket;

use quadsim_core::control::{ControllerConfig, ControllerNode, SafetyReason, TickMode};
use quadsim_core::dynamics::{hover_speed, MotorSpeeds, QuadParams, RotationalModel, VehicleState};
use quadsim_core::harness::LogKind;
use quadsim_core::middleware::{
    decode_frame, run_controller_udp, run_plant_udp, udp_run, PlantNode, Topic, UdpConfig,
};

fn controller() -> ControllerNode {
    let p = QuadParams::default();
    ControllerNode::new(ControllerConfig::for_params(&p).unwrap(), p).unwrap()
}

fn plant() -> PlantNode {
    PlantNode::new(
        QuadParams::default(),
        RotationalModel::Full,
        VehicleState::default(),
        0.01,
    )
}

fn free_addr() -> std::net::SocketAddr {
    UdpSocket::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
}

#[test]
fn controller_without_plant_only_sends_safety_commands() {
    let cfg = UdpConfig {
        plant_addr: free_addr(),
        duration_s: 0.3,
        ..Default::default()
    };
    let trace = run_controller_udp(&cfg, controller()).unwrap();
    assert_eq!(trace.commands.len(), 15);
    let hover = MotorSpeeds::uniform(hover_speed(&QuadParams::default()));
    for c in &trace.commands {
        assert!(matches!(c.mode, TickMode::Safety(SafetyReason::Missing(_))));
        assert_eq!(c.speeds, hover);
    }
    let sent: Vec<_> = trace.frames(LogKind::Sent).collect();
    assert_eq!(sent.len(), 15);
    let first = decode_frame(&sent[0].frame).unwrap();
    assert_eq!((first.topic, first.seq), (Topic::MotorCommands, 0));
}

#[test]
fn killing_the_plant_trips_the_safety_branch_within_budget() {
    let cfg = UdpConfig {
        duration_s: 1.0,
        kill_plant_after_s: Some(0.4),
        ..Default::default()
    };
    let trace = udp_run(&cfg, plant(), controller()).unwrap();
    assert!(trace.fault.is_none());
    assert!(trace.plant_steps <= 40);
    let first_safety = trace
        .commands
        .iter()
        .skip(5)
        .find(|c| matches!(c.mode, TickMode::Safety(SafetyReason::Stale(_))))
        .expect("controller never noticed the dead plant");
    // kill + staleness budget + one controller period, plus scheduling slack
    assert!(
        first_safety.t_ns <= 560_000_000,
        "first safety tick at {} ns",
        first_safety.t_ns
    );
    let later = trace
        .commands
        .iter()
        .filter(|c| c.t_ns >= first_safety.t_ns);
    assert!(later.clone().all(|c| c.speeds == first_safety.speeds));
}

#[test]
fn hover_over_loopback_stays_put() {
    let cfg = UdpConfig {
        duration_s: 1.0,
        ..Default::default()
    };
    let trace = udp_run(&cfg, plant(), controller()).unwrap();
    assert_eq!(trace.plant_steps, 100);
    assert_eq!(trace.rows.len(), 101);
    let zmax = trace
        .rows
        .iter()
        .map(|r| r.state.position.z.abs())
        .fold(0.0, f64::max);
    assert!(zmax < 1e-3, "max |z| = {zmax}");
    assert!(trace.frames(LogKind::Received).count() > 0);
}

#[test]
fn plant_alone_starts_after_waiting_and_falls() {
    let cfg = UdpConfig {
        controller_addr: free_addr(),
        duration_s: 0.2,
        ..Default::default()
    };
    let trace = run_plant_udp(&cfg, plant()).unwrap();
    assert_eq!(trace.rows.len(), 21);
    assert!(trace.rows.iter().all(|r| r.motors == MotorSpeeds::ZERO));
    let last = trace.rows.last().unwrap().state;
    assert!((last.position.z + 0.5 * 9.81 * 0.04).abs() < 1e-9);
}

#[test]
fn bind_conflict_is_reported() {
    let held = UdpSocket::bind("127.0.0.1:0").unwrap();
    let cfg = UdpConfig {
        plant_addr: held.local_addr().unwrap(),
        duration_s: 0.1,
        ..Default::default()
    };
    assert!(udp_run(&cfg, plant(), controller()).is_err());
}

//! UDP transport: each node runs against the wall clock at its own rate and
//! exchanges one encoded frame per datagram. Nothing is retransmitted;
//! late or out-of-order frames are dropped by the subscription slot.

use std::io::{self, ErrorKind};
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::lockstep::rate_ratio;
use super::{
    decode_frame, encode_frame, EncodeError, PlantNode, SchedulerError, Subscription, Topic,
    HEADER_LEN,
};
use crate::control::{ControllerNode, SensorSnapshot};
use crate::harness::{CommandRecord, FaultRecord, LogEntry, LogKind, Trace, TraceRow};

/// Largest frame a node may put in one datagram, bytes.
pub const MAX_DATAGRAM_PAYLOAD: usize = 1200;

const RECV_POLL: Duration = Duration::from_millis(10);

/// How long the plant waits for its first motor command before starting
/// its clock anyway.
const START_WAIT: Duration = Duration::from_secs(1);

#[derive(Debug, Error)]
pub enum UdpError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error(
        "{topic} frames are {len} bytes, over the {MAX_DATAGRAM_PAYLOAD}-byte datagram budget"
    )]
    Oversized { topic: Topic, len: usize },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("socket error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UdpConfig {
    /// Port 0 picks a free port.
    pub plant_addr: SocketAddr,
    pub controller_addr: SocketAddr,
    pub plant_rate_hz: f64,
    pub controller_rate_hz: f64,
    pub duration_s: f64,
    /// Plant node stops entirely (no publishing, no stepping) at this time.
    pub kill_plant_after_s: Option<f64>,
}

impl Default for UdpConfig {
    fn default() -> Self {
        let lo = |port| SocketAddr::from(([127, 0, 0, 1], port));
        Self {
            plant_addr: lo(0),
            controller_addr: lo(0),
            plant_rate_hz: 100.0,
            controller_rate_hz: 50.0,
            duration_s: 15.0,
            kill_plant_after_s: None,
        }
    }
}

impl UdpConfig {
    fn validate(&self) -> Result<(), UdpError> {
        rate_ratio(self.plant_rate_hz, self.controller_rate_hz)?;
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(SchedulerError::InvalidDuration(self.duration_s).into());
        }
        for topic in Topic::ALL {
            let len = HEADER_LEN + topic.payload_len();
            if len > MAX_DATAGRAM_PAYLOAD {
                return Err(UdpError::Oversized { topic, len });
            }
        }
        Ok(())
    }
}

/// Monotonic nanoseconds since a shared epoch.
#[derive(Debug, Clone, Copy)]
struct Clock(Instant);

impl Clock {
    fn now_ns(&self) -> i64 {
        self.0.elapsed().as_nanos() as i64
    }

    fn sleep_until(&self, deadline_ns: i64) {
        let now = self.now_ns();
        if deadline_ns > now {
            thread::sleep(Duration::from_nanos((deadline_ns - now) as u64));
        }
    }
}

fn bind(addr: SocketAddr) -> Result<UdpSocket, UdpError> {
    let sock = UdpSocket::bind(addr).map_err(|source| UdpError::Bind { addr, source })?;
    sock.set_read_timeout(Some(RECV_POLL))?;
    Ok(sock)
}

/// Decodes datagrams into the matching subscription slots until `stop`.
fn receive_loop(
    sock: &UdpSocket,
    subs: &[Subscription],
    clock: Clock,
    stop: &AtomicBool,
) -> Vec<LogEntry> {
    let mut log = Vec::new();
    let mut buf = [0u8; 2048];
    while !stop.load(Ordering::Acquire) {
        let n = match sock.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            // ICMP port-unreachable from an absent peer surfaces here on Linux
            Err(e) if e.kind() == ErrorKind::ConnectionRefused => continue,
            Err(_) => continue,
        };
        let now = clock.now_ns();
        let Ok(msg) = decode_frame(&buf[..n]) else {
            continue;
        };
        if let Some(sub) = subs.iter().find(|s| s.topic() == msg.topic) {
            sub.slot().offer(msg, now);
            log.push(LogEntry {
                at_ns: now,
                kind: LogKind::Received,
                frame: buf[..n].to_vec(),
            });
        }
    }
    log
}

struct ControllerOutput {
    commands: Vec<CommandRecord>,
    log: Vec<LogEntry>,
}

fn controller_side(
    sock: &UdpSocket,
    peer: SocketAddr,
    mut node: ControllerNode,
    cfg: &UdpConfig,
    clock: Clock,
    stop: &AtomicBool,
) -> ControllerOutput {
    let subs = [
        Subscription::new(Topic::Imu),
        Subscription::new(Topic::Pose),
        Subscription::new(Topic::Velocity),
    ];
    let ticks = (cfg.duration_s * cfg.controller_rate_hz).round() as i64;
    let period = (1e9 / cfg.controller_rate_hz).round() as i64;
    let mut out = ControllerOutput {
        commands: Vec::with_capacity(ticks as usize),
        log: Vec::new(),
    };

    thread::scope(|s| {
        let rx = s.spawn(|| receive_loop(sock, &subs, clock, stop));
        for k in 0..ticks {
            clock.sleep_until(k * period);
            let now = clock.now_ns();
            let snapshot = SensorSnapshot::from_subscriptions(&subs[0], &subs[1], &subs[2]);
            let (msg, outcome) = node.tick(&snapshot, now);
            let frame = encode_frame(&msg).expect("motor command matches its topic");
            // send errors (e.g. no peer yet) are losses, like any other drop
            let _ = sock.send_to(&frame, peer);
            out.commands.push(CommandRecord {
                t_ns: now,
                speeds: outcome.speeds,
                mode: outcome.mode,
            });
            out.log.push(LogEntry {
                at_ns: now,
                kind: LogKind::Sent,
                frame,
            });
        }
        stop.store(true, Ordering::Release);
        out.log.extend(rx.join().expect("receiver thread panicked"));
    });
    out
}

struct PlantOutput {
    rows: Vec<TraceRow>,
    log: Vec<LogEntry>,
    fault: Option<FaultRecord>,
    steps: usize,
}

fn plant_side(
    sock: &UdpSocket,
    peer: SocketAddr,
    mut node: PlantNode,
    cfg: &UdpConfig,
    clock: Clock,
    stop: &AtomicBool,
    own_shutdown: bool,
) -> PlantOutput {
    let commands = Subscription::new(Topic::MotorCommands);
    let steps = (cfg.duration_s * cfg.plant_rate_hz).round() as i64;
    let period = (1e9 / cfg.plant_rate_hz).round() as i64;
    let kill_ns = cfg.kill_plant_after_s.map(|s| (s * 1e9).round() as i64);
    let mut out = PlantOutput {
        rows: Vec::new(),
        log: Vec::new(),
        fault: None,
        steps: 0,
    };

    thread::scope(|s| {
        let subs = std::slice::from_ref(&commands);
        let rx = s.spawn(|| receive_loop(sock, subs, clock, stop));
        // announce the initial state until the first command arrives, so the
        // plant does not integrate with motors off while the link comes up
        let waited_since = clock.now_ns();
        while commands.latest().is_none()
            && clock.now_ns() - waited_since < START_WAIT.as_nanos() as i64
        {
            let now = clock.now_ns();
            for msg in node.state_messages(now) {
                let frame = encode_frame(&msg).expect("state payloads match their topics");
                let _ = sock.send_to(&frame, peer);
                out.log.push(LogEntry {
                    at_ns: now,
                    kind: LogKind::Sent,
                    frame,
                });
            }
            thread::sleep(Duration::from_nanos(period as u64 / 10));
        }
        let start = clock.now_ns();
        for k in 0..steps {
            let offset = k * period;
            if kill_ns.is_some_and(|kill| offset >= kill) {
                break;
            }
            clock.sleep_until(start + offset);
            let now = clock.now_ns();
            for msg in node.state_messages(now) {
                let frame = encode_frame(&msg).expect("state payloads match their topics");
                let _ = sock.send_to(&frame, peer);
                out.log.push(LogEntry {
                    at_ns: now,
                    kind: LogKind::Sent,
                    frame,
                });
            }
            node.apply_command(commands.latest());
            out.rows.push(TraceRow {
                state: *node.state(),
                motors: node.command(),
            });
            if let Err(error) = node.step() {
                out.fault = Some(FaultRecord {
                    t: node.state().t,
                    error,
                });
                break;
            }
            out.steps += 1;
        }
        if out.fault.is_none() {
            out.rows.push(TraceRow {
                state: *node.state(),
                motors: node.command(),
            });
        }
        if own_shutdown {
            stop.store(true, Ordering::Release);
        }
        out.log.extend(join_when_stopped(rx, stop));
    });
    out
}

/// Waits for `stop` (set by whoever owns the run), then joins the receiver.
fn join_when_stopped<T>(handle: thread::ScopedJoinHandle<'_, T>, stop: &AtomicBool) -> T {
    while !stop.load(Ordering::Acquire) {
        thread::sleep(RECV_POLL);
    }
    handle.join().expect("receiver thread panicked")
}

fn merge_logs(mut log: Vec<LogEntry>) -> Vec<LogEntry> {
    log.sort_by_key(|e| e.at_ns);
    log
}

/// Runs both nodes over loopback (or the configured endpoints) for the
/// configured duration.
pub fn udp_run(
    cfg: &UdpConfig,
    plant: PlantNode,
    controller: ControllerNode,
) -> Result<Trace, UdpError> {
    cfg.validate()?;
    let plant_sock = bind(cfg.plant_addr)?;
    let ctrl_sock = bind(cfg.controller_addr)?;
    let plant_peer = ctrl_sock.local_addr()?;
    let ctrl_peer = plant_sock.local_addr()?;
    let clock = Clock(Instant::now());
    let ctrl_stop = AtomicBool::new(false);
    let plant_stop = AtomicBool::new(false);

    let (p, c) = thread::scope(|s| {
        let c =
            s.spawn(|| controller_side(&ctrl_sock, ctrl_peer, controller, cfg, clock, &ctrl_stop));
        let p = s.spawn(|| {
            plant_side(
                &plant_sock,
                plant_peer,
                plant,
                cfg,
                clock,
                &plant_stop,
                false,
            )
        });
        let c = c.join().expect("controller thread panicked");
        plant_stop.store(true, Ordering::Release);
        (p.join().expect("plant thread panicked"), c)
    });

    Ok(Trace {
        plant_steps: p.steps,
        controller_ticks: c.commands.len(),
        rows: p.rows,
        commands: c.commands,
        log: merge_logs(p.log.into_iter().chain(c.log).collect()),
        fault: p.fault,
    })
}

/// Runs only the controller node, sending to `cfg.plant_addr`.
pub fn run_controller_udp(cfg: &UdpConfig, controller: ControllerNode) -> Result<Trace, UdpError> {
    cfg.validate()?;
    let sock = bind(cfg.controller_addr)?;
    let stop = AtomicBool::new(false);
    let c = controller_side(
        &sock,
        cfg.plant_addr,
        controller,
        cfg,
        Clock(Instant::now()),
        &stop,
    );
    Ok(Trace {
        controller_ticks: c.commands.len(),
        commands: c.commands,
        log: merge_logs(c.log),
        ..Default::default()
    })
}

/// Runs only the plant node, publishing to `cfg.controller_addr`.
pub fn run_plant_udp(cfg: &UdpConfig, plant: PlantNode) -> Result<Trace, UdpError> {
    cfg.validate()?;
    let sock = bind(cfg.plant_addr)?;
    let stop = AtomicBool::new(false);
    let p = plant_side(
        &sock,
        cfg.controller_addr,
        plant,
        cfg,
        Clock(Instant::now()),
        &stop,
        true,
    );
    Ok(Trace {
        plant_steps: p.steps,
        rows: p.rows,
        log: merge_logs(p.log),
        fault: p.fault,
        ..Default::default()
    })
}

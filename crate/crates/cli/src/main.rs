use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use quadsim_core::control::fit_altitude_gains;
use quadsim_core::harness::{
    parse_scenario, run_scenario, signal_metrics, RunOutput, ScenarioConfig, StepMetrics,
    TransportKind,
};
use quadsim_core::middleware::{
    decode_frame, encode_frame, DecodeError, ImuPayload, MotorCommandPayload, Payload, PosePayload,
    Topic, TopicMessage, TwistPayload, HEADER_LEN,
};

#[derive(Parser)]
#[command(
    name = "quadsim",
    version,
    about = "Quadrotor software-in-the-loop simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print step-response metrics.
    Run {
        scenario: PathBuf,
        /// CSV output path (overrides the scenario's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        transport: Option<Transport>,
        /// Signal to report: z, phi, theta or psi. Defaults to every
        /// signal that has a setpoint step.
        #[arg(long)]
        metrics: Option<String>,
    },
    /// Print the synthesized gains for one channel.
    Gains {
        #[arg(long, value_enum)]
        channel: Channel,
        /// Take parameters and weights from this scenario instead of defaults.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Round-trip the wire format against fixed vectors.
    CodecSelftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Lockstep,
    Udp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Channel {
    Roll,
    Pitch,
    Yaw,
    Altitude,
}

fn load(path: &PathBuf) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", path.display()))
}

fn print_table(rows: &[(String, String)]) {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("{k:<width$} : {v}");
    }
}

fn metric_rows(signal: &str, m: &StepMetrics) -> Vec<(String, String)> {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    vec![
        (
            format!("{signal}.peak_value"),
            format!("{:.6}", m.peak_value),
        ),
        (
            format!("{signal}.peak_time_s"),
            format!("{:.4}", m.peak_time_s),
        ),
        (
            format!("{signal}.overshoot_pct"),
            format!("{:.4}", m.overshoot_pct),
        ),
        (format!("{signal}.settling_time_s"), opt(m.settling_time_s)),
        (format!("{signal}.rise_time_s"), opt(m.rise_time_s)),
        (format!("{signal}.rise95_time_s"), opt(m.rise95_time_s)),
        (
            format!("{signal}.steady_state_error"),
            format!("{:.6e}", m.steady_state_error),
        ),
    ]
}

fn run(
    scenario: &PathBuf,
    out: Option<PathBuf>,
    transport: Option<Transport>,
    metrics: Option<String>,
) -> Result<ExitCode> {
    let mut cfg = load(scenario)?;
    if out.is_some() {
        cfg.output = out;
    }
    match transport {
        Some(Transport::Lockstep) => cfg.transport = TransportKind::Lockstep,
        Some(Transport::Udp) => cfg.transport = TransportKind::Udp,
        None => {}
    }
    let output: RunOutput = run_scenario(&cfg)?;
    let trace = &output.trace;

    let mut rows = vec![
        ("plant_steps".to_string(), trace.plant_steps.to_string()),
        (
            "controller_ticks".to_string(),
            trace.controller_ticks.to_string(),
        ),
        (
            "wall_time_s".to_string(),
            format!("{:.3}", output.wall_time.as_secs_f64()),
        ),
    ];
    if let Some(path) = &output.csv_path {
        rows.push(("csv".into(), path.display().to_string()));
    }
    let signals: Vec<String> = match metrics {
        Some(s) => vec![s],
        None => ["z", "phi", "theta", "psi"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let explicit = signals.len() == 1;
    for signal in &signals {
        match signal_metrics(trace, output.schedule(), signal) {
            Ok(m) => rows.extend(metric_rows(signal, &m)),
            Err(e) if explicit => bail!("metrics for {signal}: {e}"),
            Err(_) => {}
        }
    }
    if let Some(fault) = &trace.fault {
        rows.push((
            "fault".into(),
            format!("t={:.4} s: {}", fault.t, fault.error),
        ));
    }
    print_table(&rows);
    Ok(if trace.fault.is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn gains(channel: Channel, scenario: Option<PathBuf>) -> Result<()> {
    let cfg = match scenario {
        Some(path) => load(&path)?,
        None => ScenarioConfig::default(),
    };
    let rows = match channel {
        Channel::Altitude => {
            let (overshoot, peak) = cfg.altitude_target;
            let g = fit_altitude_gains(overshoot, peak, &cfg.params)?;
            let ctrl = cfg.controller_config()?;
            vec![
                ("kp".to_string(), format!("{:.12}", ctrl.altitude.kp)),
                ("kd".to_string(), format!("{:.12}", ctrl.altitude.kd)),
                ("fitted_kp".to_string(), format!("{:.12}", g.kp)),
                ("fitted_kd".to_string(), format!("{:.12}", g.kd)),
            ]
        }
        ch => {
            let (idx, inertia) = match ch {
                Channel::Roll => (0, cfg.params.ixx),
                Channel::Pitch => (1, cfg.params.iyy),
                _ => (2, cfg.params.izz),
            };
            let att = cfg.attitude_gains()?;
            let g = [att.roll, att.pitch, att.yaw][idx];
            let w = cfg.lqr[idx];
            vec![
                ("inertia".to_string(), format!("{inertia}")),
                ("q1".to_string(), format!("{}", w.q1)),
                ("q2".to_string(), format!("{}", w.q2)),
                ("r".to_string(), format!("{}", w.r)),
                ("k1".to_string(), format!("{:.12}", g.k1)),
                ("k2".to_string(), format!("{:.12}", g.k2)),
            ]
        }
    };
    print_table(&rows);
    Ok(())
}

fn selftest_vectors() -> Vec<TopicMessage> {
    let msg = |seq, stamp_ns, payload: Payload| TopicMessage {
        topic: payload.topic(),
        seq,
        stamp_ns,
        payload,
    };
    vec![
        msg(
            0,
            0,
            Payload::MotorCommand(MotorCommandPayload {
                speeds: [4830.5, 4830.5, 4830.5, 4830.5],
            }),
        ),
        msg(
            7,
            20_000_000,
            Payload::Pose(PosePayload {
                position: [1.0, -2.0, 10.0],
                orientation: [1.0, 0.0, 0.0, 0.0],
            }),
        ),
        msg(
            u64::MAX,
            i64::MIN,
            Payload::Twist(TwistPayload {
                linear: [0.5; 3],
                angular: [-0.25; 3],
            }),
        ),
        msg(
            42,
            i64::MAX,
            Payload::Imu(ImuPayload {
                orientation: [0.5, 0.5, 0.5, 0.5],
                angular_velocity: [f64::MIN_POSITIVE, 0.0, -0.0],
            }),
        ),
    ]
}

fn codec_selftest() -> ExitCode {
    let mut failures = 0;
    for msg in selftest_vectors() {
        let result = (|| -> Result<usize> {
            let bytes = encode_frame(&msg)?;
            if bytes.len() != HEADER_LEN + msg.topic.payload_len() {
                bail!("frame is {} bytes", bytes.len());
            }
            if &bytes[..4] != b"QSIM" || bytes[5] != msg.topic.id() {
                bail!("bad header {:02x?}", &bytes[..6]);
            }
            let back = decode_frame(&bytes)?;
            let same_bits = back.seq == msg.seq
                && back.stamp_ns == msg.stamp_ns
                && format!("{:?}", back.payload) == format!("{:?}", msg.payload);
            if !same_bits {
                bail!("round trip changed the message");
            }
            match decode_frame(&bytes[..bytes.len() - 1]) {
                Err(DecodeError::Truncated { .. }) => {}
                other => bail!("truncated frame decoded as {other:?}"),
            }
            Ok(bytes.len())
        })();
        match result {
            Ok(len) => println!("ok   {:<22} {len} bytes", msg.topic.name()),
            Err(e) => {
                failures += 1;
                println!("FAIL {:<22} {e}", msg.topic.name());
            }
        }
    }
    let sizes = Topic::ALL.map(|t| t.payload_len());
    println!("payload sizes: {sizes:?}");
    if failures == 0 && sizes == [32, 56, 48, 56] {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            transport,
            metrics,
        } => run(&scenario, out, transport, metrics),
        Command::Gains { channel, scenario } => gains(channel, scenario).map(|_| ExitCode::SUCCESS),
        Command::CodecSelftest => Ok(codec_selftest()),
    }
}

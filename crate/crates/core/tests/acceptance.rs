//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use quadsim_core::control::{
    allocate_motors, care_residual, channel_model, closed_form_channel_gains, solve_channel_are,
    TickMode,
};
use quadsim_core::dynamics::{
    hover_speed, mix_forward, plant_step, plant_step_driven, MotorSpeeds, QuadParams,
    RotationalModel, VehicleState,
};
use quadsim_core::harness::{
    parse_scenario, run_scenario, signal_metrics, write_csv, RunOutput, ScenarioConfig,
    StepMetrics, TransportKind,
};
use quadsim_core::middleware::{
    decode_frame, encode_frame, ImuPayload, MotorCommandPayload, Payload, PosePayload, Topic,
    TopicMessage, TwistPayload, HEADER_LEN,
};
use quadsim_core::LqrWeights;

const WALL_LIMIT: Duration = Duration::from_secs(5);

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: u32, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("PASS  {id:>2} {name}: {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL  {id:>2} {name}: {detail}");
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario(name: &str) -> Result<ScenarioConfig, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{name}: {e}"))
}

fn run(cfg: &ScenarioConfig) -> Result<RunOutput, String> {
    let out = run_scenario(cfg).map_err(|e| e.to_string())?;
    if let Some(f) = &out.trace.fault {
        return Err(format!("plant fault at t={:.3}: {}", f.t, f.error));
    }
    Ok(out)
}

fn metrics(out: &RunOutput, signal: &str) -> Result<StepMetrics, String> {
    signal_metrics(&out.trace, out.schedule(), signal).map_err(|e| e.to_string())
}

fn wall_ok(out: &RunOutput) -> Result<(), String> {
    ensure(out.wall_time < WALL_LIMIT, || {
        format!("wall time {:?} over {WALL_LIMIT:?}", out.wall_time)
    })
}

fn altitude_step() -> Result<String, String> {
    let out = run(&scenario("altitude_step.scenario")?)?;
    let m = metrics(&out, "z")?;
    ensure((13.0..=23.0).contains(&m.overshoot_pct), || {
        format!("overshoot {:.2}%", m.overshoot_pct)
    })?;
    ensure((2.0..=3.0).contains(&m.peak_time_s), || {
        format!("peak time {:.3} s", m.peak_time_s)
    })?;
    let settle = m.settling_time_s.ok_or("never settles")?;
    ensure(settle <= 9.0, || format!("settling {settle:.3} s"))?;
    ensure(m.steady_state_error < 0.05, || {
        format!("sse {:.4} m", m.steady_state_error)
    })?;
    wall_ok(&out)?;
    Ok(format!(
        "overshoot {:.2}%, peak {:.2} s, settling {:.2} s, sse {:.2e} m, wall {:?}",
        m.overshoot_pct, m.peak_time_s, settle, m.steady_state_error, out.wall_time
    ))
}

fn attitude_step(file: &str, signal: &str) -> Result<StepMetrics, String> {
    let out = run(&scenario(file)?)?;
    wall_ok(&out)?;
    let m = metrics(&out, signal)?;
    ensure(m.overshoot_pct < 2.0, || {
        format!("overshoot {:.3}%", m.overshoot_pct)
    })?;
    let rise = m.rise95_time_s.ok_or("never reaches 95%")?;
    ensure(rise <= 4.0, || format!("95% rise {rise:.3} s"))?;
    ensure(m.steady_state_error < 1e-3, || {
        format!("sse {:.2e} rad", m.steady_state_error)
    })?;
    Ok(m)
}

fn describe(m: &StepMetrics) -> String {
    format!(
        "overshoot {:.3}%, 95% rise {:.3} s, sse {:.1e} rad",
        m.overshoot_pct,
        m.rise95_time_s.unwrap_or(f64::NAN),
        m.steady_state_error
    )
}

fn roll_step() -> Result<String, String> {
    attitude_step("roll_step.scenario", "phi").map(|m| describe(&m))
}

fn pitch_step() -> Result<String, String> {
    let roll = attitude_step("roll_step.scenario", "phi")?;
    let pitch = attitude_step("pitch_step.scenario", "theta")?;
    let (r, p) = (roll.rise95_time_s.unwrap(), pitch.rise95_time_s.unwrap());
    let rel = (p - r).abs() / r;
    ensure(rel <= 0.10, || {
        format!("rise times differ by {:.1}%", 100.0 * rel)
    })?;
    Ok(format!(
        "{}; differs from roll by {:.2}%",
        describe(&pitch),
        100.0 * rel
    ))
}

fn yaw_step() -> Result<String, String> {
    let roll = attitude_step("roll_step.scenario", "phi")?;
    let out = run(&scenario("yaw_step.scenario")?)?;
    wall_ok(&out)?;
    let m = metrics(&out, "psi")?;
    let (r, y) = (
        roll.rise95_time_s.unwrap(),
        m.rise95_time_s.ok_or("never reaches 95%")?,
    );
    ensure(y > r, || {
        format!("yaw 95% rise {y:.4} s not slower than roll {r:.4} s")
    })?;
    ensure(m.overshoot_pct < 1e-6, || {
        format!("overshoot {:.3e}%", m.overshoot_pct)
    })?;
    let settle = m.settling_time_s.ok_or("never settles")?;
    ensure(settle < 15.0, || format!("settling {settle:.3} s"))?;
    Ok(format!(
        "95% rise {y:.4} s vs roll {r:.4} s, overshoot {:.1e}%, settling {settle:.2} s",
        m.overshoot_pct
    ))
}

fn hover_fixed_point() -> Result<String, String> {
    let p = QuadParams::default();
    let w = MotorSpeeds::uniform(hover_speed(&p));
    let initial = VehicleState::default().to_vector();
    let mut s = VehicleState::default();
    let mut worst = 0.0f64;
    for _ in 0..1500 {
        s = plant_step(&s, &w, &p, 0.01, RotationalModel::Full).map_err(|e| e.to_string())?;
        worst = worst.max((s.to_vector() - initial).amax());
    }
    ensure(worst < 1e-6, || format!("max deviation {worst:.3e}"))?;

    let out = run(&scenario("hover.scenario")?)?;
    wall_ok(&out)?;
    let z = out.trace.column("z").unwrap();
    let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ensure(zmax < 1e-3, || {
        format!("closed-loop hover max |z| {zmax:.3e} m")
    })?;
    Ok(format!(
        "open-loop max deviation {worst:.1e}, closed-loop max |z| {zmax:.1e} m"
    ))
}

fn are_oracle() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut worst_solver = 0.0f64;
    for _ in 0..100 {
        let inertia = 10f64.powf(rng.random_range(-3.0..0.0));
        let w = LqrWeights {
            q1: 10f64.powf(rng.random_range(-1.0..1.0)),
            q2: 10f64.powf(rng.random_range(-1.0..1.0)),
            r: 10f64.powf(rng.random_range(-1.0..1.0)),
        };
        let g = closed_form_channel_gains(inertia, &w);
        let (k1, k2, r) = (g.k1, g.k2, w.r);
        let p = DMatrix::from_row_slice(
            2,
            2,
            &[
                k1 * k2 * r,
                -k1 * r * inertia,
                -k1 * r * inertia,
                k2 * r * inertia,
            ],
        );
        let (a, b) = channel_model(inertia);
        let q = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[w.q1, w.q2]));
        let rm = DMatrix::from_element(1, 1, r);
        let res = care_residual(&a, &b, &q, &rm, &p);
        worst = worst.max(res);
        ensure(res < 1e-9, || {
            format!("residual {res:.3e} at I={inertia}, {w:?}")
        })?;

        // u = k1·e − k2·rate is u = −Kx with K = [−k1, k2]
        let k = DMatrix::from_row_slice(1, 2, &[-k1, k2]);
        let closed = &a - &b * k;
        let stable = closed.complex_eigenvalues().iter().all(|l| l.re < 0.0);
        ensure(stable, || {
            format!("closed loop not Hurwitz at I={inertia}, {w:?}")
        })?;

        let solved = solve_channel_are(inertia, &w).map_err(|e| e.to_string())?;
        worst_solver = worst_solver.max((solved.k1 - k1).abs().max((solved.k2 - k2).abs()));
    }
    ensure(worst_solver < 1e-8, || {
        format!("iterative solver off by {worst_solver:.3e}")
    })?;
    Ok(format!(
        "max residual {worst:.2e}, iterative solver agrees to {worst_solver:.1e}"
    ))
}

fn allocation_round_trip() -> Result<String, String> {
    let p = QuadParams::default();
    let wh = hover_speed(&p);
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let w = MotorSpeeds(std::array::from_fn(|_| {
            rng.random_range(0.2 * wh..1.8 * wh)
        }));
        let u = mix_forward(&w, &p);
        let back = mix_forward(&allocate_motors(&u, &p).map_err(|e| e.to_string())?, &p);
        let rel = (back.to_vector() - u.to_vector()).norm() / u.to_vector().norm();
        worst = worst.max(rel);
    }
    ensure(worst < 1e-9, || format!("relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.2e} over 1000 draws"))
}

fn random_message(rng: &mut StdRng) -> TopicMessage {
    let seq = rng.random();
    let stamp_ns = rng.random();
    let kind = rng.random_range(0..4);
    let mut f = || rng.random_range(-1e4..1e4);
    let payload = match kind {
        0 => Payload::MotorCommand(MotorCommandPayload {
            speeds: std::array::from_fn(|_| f()),
        }),
        1 => Payload::Pose(PosePayload {
            position: std::array::from_fn(|_| f()),
            orientation: std::array::from_fn(|_| f()),
        }),
        2 => Payload::Twist(TwistPayload {
            linear: std::array::from_fn(|_| f()),
            angular: std::array::from_fn(|_| f()),
        }),
        _ => Payload::Imu(ImuPayload {
            orientation: std::array::from_fn(|_| f()),
            angular_velocity: std::array::from_fn(|_| f()),
        }),
    };
    TopicMessage {
        topic: payload.topic(),
        seq,
        stamp_ns,
        payload,
    }
}

fn codec() -> Result<String, String> {
    let expected = [
        (Topic::MotorCommands, 32),
        (Topic::Pose, 56),
        (Topic::Velocity, 48),
        (Topic::Imu, 56),
    ];
    for (topic, len) in expected {
        ensure(topic.payload_len() == len, || {
            format!("{topic} payload is {} bytes", topic.payload_len())
        })?;
    }
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..1000 {
        let msg = random_message(&mut rng);
        let bytes = encode_frame(&msg).map_err(|e| e.to_string())?;
        ensure(bytes.len() == HEADER_LEN + msg.topic.payload_len(), || {
            format!("frame length {}", bytes.len())
        })?;
        let back = decode_frame(&bytes).map_err(|e| e.to_string())?;
        ensure(back == msg, || format!("round trip changed {msg:?}"))?;
    }
    Ok("1000 random frames round-trip exactly; payloads 32/56/48/56 bytes".into())
}

fn csv_bytes(out: &RunOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&out.trace, &mut buf).expect("in-memory write");
    buf
}

fn determinism() -> Result<String, String> {
    let files = [
        "hover.scenario",
        "altitude_step.scenario",
        "roll_step.scenario",
        "pitch_step.scenario",
        "yaw_step.scenario",
        "plant_dropout.scenario",
    ];
    for file in files {
        let cfg = scenario(file)?;
        let (a, b) = (run(&cfg)?, run(&cfg)?);
        ensure(csv_bytes(&a) == csv_bytes(&b), || {
            format!("{file}: CSVs differ")
        })?;
        let rows = a.trace.rows.len();
        ensure(rows == 1501, || format!("{file}: {rows} rows"))?;
    }

    let lockstep = run(&scenario("hover.scenario")?)?;
    let mut cfg = scenario("hover_udp.scenario")?;
    cfg.transport = TransportKind::Udp;
    let udp = run(&cfg)?;
    let period = lockstep.controller.period_ns();
    let cmds = &udp.trace.commands;
    ensure(cmds.len() > 600, || {
        format!("only {} UDP controller ticks", cmds.len())
    })?;
    for c in cmds {
        let matched = lockstep.trace.commands.iter().any(|l| {
            (l.t_ns - c.t_ns).abs() <= period
                && l.speeds
                    .0
                    .iter()
                    .zip(&c.speeds.0)
                    .all(|(a, b)| (a - b).abs() <= 1e-3 * a.abs().max(1.0))
        });
        ensure(matched, || {
            format!("UDP command at {} ns has no lockstep counterpart", c.t_ns)
        })?;
    }
    let mean_period = (cmds.last().unwrap().t_ns - cmds[0].t_ns) as f64 / (cmds.len() - 1) as f64;
    let drift = (mean_period - period as f64).abs() / period as f64;
    ensure(drift < 0.05, || {
        format!("mean UDP controller period {:.3} ms", mean_period * 1e-6)
    })?;
    Ok(format!(
        "{} scenarios byte-identical, UDP hover: {} commands all matched, mean period {:.3} ms",
        files.len(),
        cmds.len(),
        mean_period * 1e-6
    ))
}

fn safety_branch() -> Result<String, String> {
    let cfg = scenario("plant_dropout.scenario")?;
    let out = run(&cfg)?;
    wall_ok(&out)?;
    let mute_ns = (cfg
        .mute_plant_after_s
        .ok_or("scenario does not mute the plant")?
        * 1e9)
        .round() as i64;
    let deadline = mute_ns
        + (out.controller.staleness_budget_s * 1e9).round() as i64
        + out.controller.period_ns();
    let safety = out.controller.safety_command;
    let first = out
        .trace
        .commands
        .iter()
        .position(|c| c.t_ns >= mute_ns && matches!(c.mode, TickMode::Safety(_)))
        .ok_or("no safety command after mute")?;
    let t_first = out.trace.commands[first].t_ns;
    ensure(t_first <= deadline, || {
        format!(
            "first safety command at {} ns, deadline {deadline} ns",
            t_first
        )
    })?;
    for c in &out.trace.commands[first..] {
        let exact = c
            .speeds
            .0
            .iter()
            .zip(&safety.0)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(exact, || {
            format!(
                "command at {} ns is {:?}, not the safety command",
                c.t_ns, c.speeds
            )
        })?;
    }
    ensure(
        out.trace.commands[..first]
            .iter()
            .all(|c| c.mode == TickMode::Normal),
        || "safety mode before the plant was muted".into(),
    )?;
    Ok(format!(
        "first safety command at {:.2} s (deadline {:.2} s), {} later commands identical",
        t_first as f64 * 1e-9,
        deadline as f64 * 1e-9,
        out.trace.commands.len() - first - 1
    ))
}

fn simulate(dt: f64, horizon: f64) -> Result<VehicleState, String> {
    let p = QuadParams::default();
    let wh = hover_speed(&p);
    let input = |t: f64| {
        MotorSpeeds(std::array::from_fn(|i| {
            let i = i as f64;
            wh * (1.0 + 2e-4 * (2.0 * std::f64::consts::PI * (0.5 + 0.3 * i) * t + i).sin())
        }))
    };
    let steps = (horizon / dt).round() as usize;
    let mut s = VehicleState::default();
    for _ in 0..steps {
        s = plant_step_driven(&s, input, &p, dt, RotationalModel::Full)
            .map_err(|e| e.to_string())?;
    }
    Ok(s)
}

fn integrator_order() -> Result<String, String> {
    let horizon = 2.0;
    let reference = simulate(0.02 / 64.0, horizon)?.to_vector();
    let e1 = (simulate(0.02, horizon)?.to_vector() - reference).norm();
    let e2 = (simulate(0.01, horizon)?.to_vector() - reference).norm();
    let ratio = e1 / e2;
    ensure((12.0..=20.0).contains(&ratio), || {
        format!("ratio {ratio:.3} (errors {e1:.3e}, {e2:.3e})")
    })?;
    Ok(format!(
        "error ratio {ratio:.3} (dt=0.02: {e1:.3e}, dt=0.01: {e2:.3e})"
    ))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut report = Report { failures: 0 };
    report.check(1, "altitude step", altitude_step());
    report.check(2, "roll step", roll_step());
    report.check(3, "pitch step", pitch_step());
    report.check(4, "yaw step", yaw_step());
    report.check(5, "hover fixed point", hover_fixed_point());
    report.check(6, "Riccati oracle", are_oracle());
    report.check(7, "allocation round trip", allocation_round_trip());
    report.check(8, "wire codec", codec());
    report.check(9, "determinism", determinism());
    report.check(10, "safety branch", safety_branch());
    report.check(11, "integrator order", integrator_order());
    println!(
        "{} failure(s), {:.1} s",
        report.failures,
        started.elapsed().as_secs_f64()
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

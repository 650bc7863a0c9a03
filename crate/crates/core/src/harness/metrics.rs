use thiserror::Error;

use super::Trace;
use crate::control::Setpoint;

const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("setpoint equals the initial value; the step has no span")]
    UndefinedSpan,
    #[error("time and value series are empty or of different length")]
    InvalidTrace,
    #[error("no setpoint field for signal {0:?}")]
    UnsupportedSignal(String),
    #[error("no step on signal {0:?} in the schedule")]
    NoStep(String),
}

/// Step response figures. Times are measured from the first sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub peak_value: f64,
    pub peak_time_s: f64,
    /// Percent of the step span, never negative.
    pub overshoot_pct: f64,
    /// Time after which the signal stays within ±2 % of the span around
    /// the setpoint. `None` if it never settles.
    pub settling_time_s: Option<f64>,
    /// 10 % to 90 % rise.
    pub rise_time_s: Option<f64>,
    /// First time 95 % of the span is reached.
    pub rise95_time_s: Option<f64>,
    /// |setpoint − mean over the final second|.
    pub steady_state_error: f64,
}

/// First time the normalized signal reaches `level`, linearly interpolated
/// between samples.
fn crossing(times: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let i = y.iter().position(|v| *v >= level)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (y0, y1) = (y[i - 1], y[i]);
    let frac = (level - y0) / (y1 - y0);
    Some(times[i - 1] + frac * (times[i] - times[i - 1]))
}

pub fn step_metrics(
    times: &[f64],
    values: &[f64],
    setpoint: f64,
    initial: f64,
) -> Result<StepMetrics, MetricsError> {
    if times.is_empty() || times.len() != values.len() {
        return Err(MetricsError::InvalidTrace);
    }
    let span = setpoint - initial;
    if span == 0.0 {
        return Err(MetricsError::UndefinedSpan);
    }
    let t0 = times[0];
    let t_end = times[times.len() - 1];
    let y: Vec<f64> = values.iter().map(|v| (v - initial) / span).collect();

    let (peak_idx, peak_norm) =
        y.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });

    let settling_time_s = match y.iter().rposition(|v| (v - 1.0).abs() > SETTLING_BAND) {
        None => Some(0.0),
        Some(j) if j + 1 < y.len() => Some(times[j + 1] - t0),
        Some(_) => None,
    };

    let rise_time_s = match (crossing(times, &y, 0.1), crossing(times, &y, 0.9)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let tail: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t_end - 1.0)
        .map(|(_, v)| *v)
        .collect();
    let mean_tail = tail.iter().sum::<f64>() / tail.len() as f64;

    Ok(StepMetrics {
        peak_value: values[peak_idx],
        peak_time_s: times[peak_idx] - t0,
        overshoot_pct: (100.0 * (peak_norm - 1.0)).max(0.0),
        settling_time_s,
        rise_time_s,
        rise95_time_s: crossing(times, &y, 0.95).map(|t| t - t0),
        steady_state_error: (setpoint - mean_tail).abs(),
    })
}

fn setpoint_field(signal: &str) -> Option<fn(&Setpoint) -> f64> {
    Some(match signal {
        "z" => |s: &Setpoint| s.z_des,
        "phi" => |s: &Setpoint| s.phi_des,
        "theta" => |s: &Setpoint| s.theta_des,
        "psi" => |s: &Setpoint| s.psi_des,
        _ => return None,
    })
}

/// Metrics of `signal` (`z`, `phi`, `theta` or `psi`) for the last step
/// change of its setpoint in `schedule` (`(apply time ns, setpoint)`
/// pairs, sorted). The analysed window starts at that step.
pub fn signal_metrics(
    trace: &Trace,
    schedule: &[(i64, Setpoint)],
    signal: &str,
) -> Result<StepMetrics, MetricsError> {
    let field =
        setpoint_field(signal).ok_or_else(|| MetricsError::UnsupportedSignal(signal.into()))?;
    let mut previous = 0.0;
    let mut step = None;
    for (t_ns, sp) in schedule {
        let target = field(sp);
        if target != previous {
            step = Some((*t_ns as f64 * 1e-9, target));
        }
        previous = target;
    }
    let (t_step, target) = step.ok_or_else(|| MetricsError::NoStep(signal.into()))?;
    let column = trace.column(signal).ok_or(MetricsError::InvalidTrace)?;
    let times = trace.times();
    let start = times
        .iter()
        .position(|t| *t >= t_step - 1e-9)
        .ok_or(MetricsError::InvalidTrace)?;
    step_metrics(&times[start..], &column[start..], target, column[start])
}

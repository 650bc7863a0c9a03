use nalgebra::{DMatrix, DVector};

use super::{ChannelGains, ControlError, LqrWeights};

const MAX_ITERATIONS: usize = 60;
const REL_TOL: f64 = 1e-14;

/// Stabilizing solution of `AᵀP + PA − PBR⁻¹BᵀP + Q = 0` and the gain
/// `K = R⁻¹BᵀP` (control law `u = −Kx`).
#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub iterations: usize,
}

/// Frobenius norm of the continuous-time Riccati residual.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let r_inv = r.clone().try_inverse().expect("R must be invertible");
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

fn is_stable(m: &DMatrix<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|l| l.re < 0.0)
}

/// Solves `AᵀP + PA = −M` through the Kronecker-vectorized linear system.
fn solve_lyapunov(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -DVector::from_column_slice(m.as_slice());
    let x = op.lu().solve(&rhs)?;
    let p = DMatrix::from_column_slice(n, n, x.as_slice());
    Some((&p + p.transpose()) * 0.5)
}

/// Kleinman's Newton iteration on the Riccati equation, started from a
/// stabilizing gain `k0`. Each step solves one Lyapunov equation.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    k0: &DMatrix<f64>,
) -> Result<CareSolution, ControlError> {
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(ControlError::AreNotStabilizing)?;
    let mut k = k0.clone();
    let mut prev: Option<DMatrix<f64>> = None;
    for it in 1..=MAX_ITERATIONS {
        let closed = a - b * &k;
        if !is_stable(&closed) {
            return Err(ControlError::AreNotStabilizing);
        }
        let m = q + k.transpose() * r * &k;
        let p = solve_lyapunov(&closed, &m).ok_or(ControlError::AreNotStabilizing)?;
        k = &r_inv * b.transpose() * &p;
        if let Some(prev) = prev {
            if (&p - prev).norm() <= REL_TOL * p.norm() {
                return Ok(CareSolution {
                    p,
                    k,
                    iterations: it,
                });
            }
        }
        prev = Some(p);
    }
    Err(ControlError::AreNonConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Error-state model of one attitude channel: state `[e, rate]` with
/// `e = angle_des − angle`, input the body moment.
pub fn channel_model(inertia: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0 / inertia]);
    (a, b)
}

/// LQR gains for one attitude channel, returned in the form applied by
/// the node: `U = k1·e − k2·rate`.
pub fn solve_channel_are(inertia: f64, w: &LqrWeights) -> Result<ChannelGains, ControlError> {
    if !(inertia.is_finite() && inertia > 0.0) {
        return Err(ControlError::InvalidInertia(inertia));
    }
    w.validate()?;
    let (a, b) = channel_model(inertia);
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&[w.q1, w.q2]));
    let r = DMatrix::from_element(1, 1, w.r);
    // u = −Kx with K = [−1, 1] is k1 = k2 = 1, stabilizing for any inertia
    let k0 = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
    let sol = solve_care(&a, &b, &q, &r, &k0)?;
    Ok(ChannelGains {
        k1: -sol.k[(0, 0)],
        k2: sol.k[(0, 1)],
    })
}

/// `k1 = √(q1/r)`, `k2 = √(q2/r + 2·I·k1)`.
pub fn closed_form_channel_gains(inertia: f64, w: &LqrWeights) -> ChannelGains {
    let k1 = (w.q1 / w.r).sqrt();
    ChannelGains {
        k1,
        k2: (w.q2 / w.r + 2.0 * inertia * k1).sqrt(),
    }
}

use nalgebra::{SVector, Vector3};

use super::{mix_forward, rk4_step, DynamicsError, EulerAngles, MotorSpeeds, QuadParams};

/// `[x, y, z, vx, vy, vz, φ, θ, ψ, p, q, r]`
pub type StateVector = SVector<f64, 12>;

/// Which rotational equations the plant integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationalModel {
    /// Euler's equations with the gyroscopic cross terms.
    #[default]
    Full,
    /// Decoupled `ṗ = U2/Ixx` etc., the model the controller is designed on.
    Decoupled,
}

/// Rigid-body state. Position and velocity are earth-frame (ENU); body
/// rates are about the body axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: EulerAngles,
    pub body_rates: Vector3<f64>,
    /// Simulation time, s.
    pub t: f64,
}

impl VehicleState {
    pub fn to_vector(&self) -> StateVector {
        let a = &self.attitude;
        let (p, v, w) = (&self.position, &self.velocity, &self.body_rates);
        StateVector::from_column_slice(&[
            p.x, p.y, p.z, v.x, v.y, v.z, a.phi, a.theta, a.psi, w.x, w.y, w.z,
        ])
    }

    pub fn from_vector(x: &StateVector, t: f64) -> Self {
        Self {
            position: Vector3::new(x[0], x[1], x[2]),
            velocity: Vector3::new(x[3], x[4], x[5]),
            attitude: EulerAngles::new(x[6], x[7], x[8]),
            body_rates: Vector3::new(x[9], x[10], x[11]),
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Earth-frame linear acceleration under thrust `thrust` along body z and
/// gravity along −z.
pub fn translational_accel(att: EulerAngles, thrust: f64, p: &QuadParams) -> Vector3<f64> {
    let (sp, cp) = att.phi.sin_cos();
    let (st, ct) = att.theta.sin_cos();
    let (ss, cs) = att.psi.sin_cos();
    let a = thrust / p.mass;
    Vector3::new(
        a * (cs * st * cp + ss * sp),
        a * (ss * st * cp - cs * sp),
        a * (ct * cp) - p.gravity,
    )
}

/// Body angular acceleration for body rates `rates` and moments
/// `[U2, U3, U4]`.
pub fn rotational_accel(
    rates: &Vector3<f64>,
    moments: &Vector3<f64>,
    p: &QuadParams,
    model: RotationalModel,
) -> Vector3<f64> {
    match model {
        RotationalModel::Decoupled => {
            Vector3::new(moments.x / p.ixx, moments.y / p.iyy, moments.z / p.izz)
        }
        RotationalModel::Full => {
            let (pr, qr, rr) = (rates.x, rates.y, rates.z);
            Vector3::new(
                (moments.x + (p.iyy - p.izz) * qr * rr) / p.ixx,
                (moments.y + (p.izz - p.ixx) * pr * rr) / p.iyy,
                (moments.z + (p.ixx - p.iyy) * pr * qr) / p.izz,
            )
        }
    }
}

/// Time derivative of the 12-dimensional state. Euler-angle rates are
/// taken equal to the body rates (small-angle kinematics).
pub fn state_derivative(
    s: &VehicleState,
    w: &MotorSpeeds,
    p: &QuadParams,
    model: RotationalModel,
) -> Result<StateVector, DynamicsError> {
    s.attitude.check_gimbal()?;
    let u = mix_forward(w, p);
    let accel = translational_accel(s.attitude, u.thrust, p);
    let moments = Vector3::new(u.roll, u.pitch, u.yaw);
    let alpha = rotational_accel(&s.body_rates, &moments, p, model);
    let (v, r) = (&s.velocity, &s.body_rates);
    Ok(StateVector::from_column_slice(&[
        v.x, v.y, v.z, accel.x, accel.y, accel.z, r.x, r.y, r.z, alpha.x, alpha.y, alpha.z,
    ]))
}

/// Advances the state by one RK4 step of length `dt` with the rotor speeds
/// held constant over the step.
pub fn plant_step(
    s: &VehicleState,
    w: &MotorSpeeds,
    p: &QuadParams,
    dt: f64,
    model: RotationalModel,
) -> Result<VehicleState, DynamicsError> {
    plant_step_driven(s, |_| *w, p, dt, model)
}

/// Like [`plant_step`], but the rotor speeds are a function of time and are
/// re-evaluated at every RK4 stage.
pub fn plant_step_driven<F>(
    s: &VehicleState,
    mut input: F,
    p: &QuadParams,
    dt: f64,
    model: RotationalModel,
) -> Result<VehicleState, DynamicsError>
where
    F: FnMut(f64) -> MotorSpeeds,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let next = rk4_step(s.t, &s.to_vector(), dt, |t, x| {
        state_derivative(&VehicleState::from_vector(x, t), &input(t), p, model)
    })?;
    let out = VehicleState::from_vector(&next, s.t + dt);
    if !out.is_finite() {
        return Err(DynamicsError::NonFinite {
            state: Box::new(out),
        });
    }
    out.attitude.check_gimbal()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::dynamics::{hover_speed, rotation_enu_to_body};

    fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
        (a - b).abs().max() < tol
    }

    #[test]
    fn translational_examples() {
        let p = QuadParams::default();
        let level = EulerAngles::default();
        assert_eq!(translational_accel(level, p.weight(), &p), Vector3::zeros());
        assert_eq!(
            translational_accel(level, 0.0, &p),
            Vector3::new(0.0, 0.0, -9.81)
        );

        let a = translational_accel(EulerAngles::new(0.1, 0.15, 0.2), 19.2276, &p);
        let expected = Vector3::new(
            1.624_158_026_751_965,
            -0.670_051_855_529_676_5,
            -0.158_614_544_271_976_85,
        );
        assert!(close(&a, &expected, 1e-12), "{a}");
    }

    proptest! {
        #[test]
        fn translational_matches_rotated_thrust(
            phi in -1.0..1.0f64, theta in -1.4..1.4f64, psi in -3.0..3.0f64, thrust in 0.0..60.0f64,
        ) {
            let p = QuadParams::default();
            let att = EulerAngles::new(phi, theta, psi);
            let body_to_earth = rotation_enu_to_body(att).unwrap().transpose();
            let via_matrix = body_to_earth * Vector3::new(0.0, 0.0, thrust / p.mass)
                - Vector3::new(0.0, 0.0, p.gravity);
            prop_assert!(close(&translational_accel(att, thrust, &p), &via_matrix, 1e-12));
        }

        #[test]
        fn decoupled_equals_full_with_single_rate(
            axis in 0usize..3, rate in -20.0..20.0f64,
            m in prop::array::uniform3(-1.0..1.0f64),
        ) {
            let p = QuadParams::default();
            let mut rates = Vector3::zeros();
            rates[axis] = rate;
            let moments = Vector3::from(m);
            prop_assert_eq!(
                rotational_accel(&rates, &moments, &p, RotationalModel::Full),
                rotational_accel(&rates, &moments, &p, RotationalModel::Decoupled)
            );
        }
    }

    #[test]
    fn rotational_examples() {
        let p = QuadParams::default();
        let zero = Vector3::zeros();
        let full = RotationalModel::Full;
        assert_eq!(
            rotational_accel(&Vector3::new(1.0, 0.0, 0.0), &zero, &p, full),
            zero
        );

        let a = rotational_accel(&Vector3::new(0.0, 1.0, 1.0), &zero, &p, full);
        assert!((a.x + 2.543_624_161_073_825_3).abs() < 1e-12);
        assert_eq!((a.y, a.z), (0.0, 0.0));

        let u = Vector3::new(0.01, 0.0, 0.0);
        for model in [RotationalModel::Full, RotationalModel::Decoupled] {
            let a = rotational_accel(&zero, &u, &p, model);
            assert!((a.x - 0.671_140_939_597_315_5).abs() < 1e-12);
        }
    }

    #[test]
    fn hover_and_free_fall_derivatives() {
        let p = QuadParams::default();
        let s = VehicleState {
            position: Vector3::new(0.0, 0.0, 7.5),
            ..Default::default()
        };
        let d = state_derivative(
            &s,
            &MotorSpeeds::uniform(hover_speed(&p)),
            &p,
            RotationalModel::Full,
        )
        .unwrap();
        assert!(d.abs().max() < 1e-12, "{d}");

        let d = state_derivative(
            &VehicleState::default(),
            &MotorSpeeds::ZERO,
            &p,
            RotationalModel::Full,
        )
        .unwrap();
        let mut expected = StateVector::zeros();
        expected[5] = -9.81;
        assert_eq!(d, expected);
    }

    #[test]
    fn derivative_propagates_gimbal_lock() {
        let s = VehicleState {
            attitude: EulerAngles::new(0.0, 1.6, 0.0),
            ..Default::default()
        };
        let r = state_derivative(
            &s,
            &MotorSpeeds::ZERO,
            &QuadParams::default(),
            RotationalModel::Full,
        );
        assert!(matches!(r, Err(DynamicsError::GimbalLock { .. })));
    }

    #[test]
    fn free_fall_one_second() {
        let p = QuadParams::default();
        let mut s = VehicleState::default();
        for _ in 0..100 {
            s = plant_step(&s, &MotorSpeeds::ZERO, &p, 0.01, RotationalModel::Full).unwrap();
        }
        assert!((s.position.z + 4.905).abs() < 1e-9);
        assert!((s.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hover_is_a_fixed_point() {
        let p = QuadParams::default();
        let w = MotorSpeeds::uniform(hover_speed(&p));
        let s0 = VehicleState::default();
        let mut s = s0;
        for _ in 0..1500 {
            s = plant_step(&s, &w, &p, 0.01, RotationalModel::Full).unwrap();
        }
        assert!((s.to_vector() - s0.to_vector()).abs().max() < 1e-6);
    }

    #[test]
    fn energy_conserved_without_thrust() {
        let p = QuadParams::default();
        let energy =
            |s: &VehicleState| 0.5 * p.mass * s.velocity.norm_squared() + p.weight() * s.position.z;
        let mut s = VehicleState {
            position: Vector3::new(1.0, -2.0, 30.0),
            velocity: Vector3::new(3.0, -1.5, 4.0),
            ..Default::default()
        };
        let e0 = energy(&s);
        for _ in 0..100 {
            s = plant_step(&s, &MotorSpeeds::ZERO, &p, 0.01, RotationalModel::Full).unwrap();
        }
        assert!((energy(&s) - e0).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_finite_difference_of_steps() {
        let p = QuadParams::default();
        let wh = hover_speed(&p);
        let w = MotorSpeeds([wh * 1.01, wh * 0.99, wh * 1.005, wh * 0.995]);
        let s = VehicleState {
            velocity: Vector3::new(0.3, -0.2, 0.1),
            attitude: EulerAngles::new(0.05, -0.1, 0.3),
            body_rates: Vector3::new(0.2, -0.4, 0.1),
            ..Default::default()
        };
        let d = state_derivative(&s, &w, &p, RotationalModel::Full).unwrap();
        let mut prev = f64::INFINITY;
        for dt in [1e-3, 5e-4] {
            let next = plant_step(&s, &w, &p, dt, RotationalModel::Full).unwrap();
            let fd = (next.to_vector() - s.to_vector()) / dt;
            let err = (fd - d).abs().max();
            // first-order in dt
            assert!(err < 200.0 * dt, "dt {dt} err {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = QuadParams::default();
        let r = plant_step(
            &VehicleState::default(),
            &MotorSpeeds::ZERO,
            &p,
            0.0,
            RotationalModel::Full,
        );
        assert_eq!(r, Err(DynamicsError::InvalidStep(0.0)));
    }

    #[test]
    fn non_finite_state_reports_dump() {
        let p = QuadParams::default();
        let s = VehicleState {
            velocity: Vector3::new(f64::NAN, 0.0, 0.0),
            ..Default::default()
        };
        match plant_step(&s, &MotorSpeeds::ZERO, &p, 0.01, RotationalModel::Full) {
            Err(DynamicsError::NonFinite { state }) => assert!(state.velocity.x.is_nan()),
            other => panic!("unexpected {other:?}"),
        }
    }
}

use nalgebra::SVector;

/// One classical fourth-order Runge-Kutta step of `dy/dt = f(t, y)`.
///
/// The derivative is fallible so that model faults raised at any of the
/// four stages abort the step.
pub fn rk4_step<const N: usize, F, E>(
    t: f64,
    y: &SVector<f64, N>,
    dt: f64,
    mut f: F,
) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &(y + k1 * half))?;
    let k3 = f(t + half, &(y + k2 * half))?;
    let k4 = f(t + dt, &(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

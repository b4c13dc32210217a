use alloc::vec;

/// A stage of an RK4 step produced a non-finite derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteStage;

/// One classical RK4 step of `dx/dt = f(t, x, u)` with `u` held over the step.
///
/// `f(t, x, u, dx)` writes the derivative into `dx`. Returns the new state.
pub fn rk4_step<F>(mut f: F, x: &[f64], t: f64, dt: f64, u: f64) -> Result<alloc::vec::Vec<f64>, NonFiniteStage>
where
    F: FnMut(f64, &[f64], f64, &mut [f64]),
{
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut s = vec![0.0; n];

    f(t, x, u, &mut k1);
    check(&k1)?;
    for i in 0..n {
        s[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &s, u, &mut k2);
    check(&k2)?;
    for i in 0..n {
        s[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &s, u, &mut k3);
    check(&k3)?;
    for i in 0..n {
        s[i] = x[i] + dt * k3[i];
    }
    f(t + dt, &s, u, &mut k4);
    check(&k4)?;

    Ok((0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn check(k: &[f64]) -> Result<(), NonFiniteStage> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NonFiniteStage)
    }
}

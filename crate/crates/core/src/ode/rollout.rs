use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Grid, Result};

/// An autonomous parameterized vector field with a scalar readout and a scalar
/// exogenous input held constant over each integration step.
///
/// The `*_vjp` methods accumulate vector-Jacobian products into the supplied
/// buffers; they never overwrite them.
pub trait Dynamics {
    fn state_dim(&self) -> usize;
    fn param_dim(&self) -> usize;

    fn rhs(&self, params: &[f64], x: &[f64], input: f64, dx: &mut [f64]);

    /// `f` is the value `rhs` returned at the same `(params, x, input)`.
    #[allow(clippy::too_many_arguments)]
    fn rhs_vjp(
        &self,
        params: &[f64],
        x: &[f64],
        input: f64,
        f: &[f64],
        cot: &[f64],
        x_bar: &mut [f64],
        p_bar: &mut [f64],
    );

    fn output(&self, params: &[f64], x: &[f64]) -> f64;

    fn output_vjp(&self, params: &[f64], x: &[f64], cot: f64, x_bar: &mut [f64], p_bar: &mut [f64]);
}

/// States of a rollout, `grid.len()` rows of `dim` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// Loss value and its gradient with respect to the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradResult {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Integrate `sys` over `grid` from `x0` with zero-order-hold `inputs` (one per sample;
/// the last sample is never applied).
pub fn rollout<D: Dynamics + ?Sized>(
    sys: &D,
    params: &[f64],
    x0: &[f64],
    inputs: &[f64],
    grid: &Grid,
) -> Result<Trajectory> {
    let mut ws = RolloutWorkspace::default();
    ws.forward(sys, params, x0, inputs, grid)?;
    Ok(Trajectory { dim: sys.state_dim(), states: ws.states })
}

/// Loss and exact gradient of the RK4-unrolled rollout.
///
/// `loss(outputs, d_outputs)` receives the readout at every sample and must
/// write `d loss / d output` into `d_outputs`.
pub fn rollout_grad<D, L>(
    sys: &D,
    params: &[f64],
    x0: &[f64],
    inputs: &[f64],
    grid: &Grid,
    loss: L,
) -> Result<GradResult>
where
    D: Dynamics + ?Sized,
    L: FnOnce(&[f64], &mut [f64]) -> f64,
{
    let mut grad = vec![0.0; sys.param_dim()];
    let loss = RolloutWorkspace::default().grad_into(sys, params, x0, inputs, grid, loss, &mut grad)?;
    Ok(GradResult { loss, grad })
}

/// Reusable buffers for forward rollouts and their reverse sweeps.
#[derive(Debug, Default, Clone)]
pub struct RolloutWorkspace {
    dim: usize,
    states: Vec<f64>,
    // Four stage points and four stage derivatives per step.
    stage_x: Vec<f64>,
    stage_f: Vec<f64>,
    outputs: Vec<f64>,
    d_outputs: Vec<f64>,
    adj: Vec<f64>,
    adj_next: Vec<f64>,
    cot: Vec<f64>,
    g: Vec<f64>,
}

impl RolloutWorkspace {
    /// Readout samples of the most recent forward pass.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// State `n` of the most recent forward pass.
    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn forward<D: Dynamics + ?Sized>(
        &mut self,
        sys: &D,
        params: &[f64],
        x0: &[f64],
        inputs: &[f64],
        grid: &Grid,
    ) -> Result<()> {
        let d = sys.state_dim();
        if x0.len() != d {
            return Err(Error::Dimension { expected: d, actual: x0.len() });
        }
        if params.len() != sys.param_dim() {
            return Err(Error::Dimension { expected: sys.param_dim(), actual: params.len() });
        }
        if inputs.len() != grid.len() {
            return Err(Error::Shape { expected: grid.len(), actual: inputs.len() });
        }
        let steps = grid.steps();
        let dt = grid.dt();
        self.dim = d;
        resize(&mut self.states, (steps + 1) * d);
        resize(&mut self.stage_x, steps * 4 * d);
        resize(&mut self.stage_f, steps * 4 * d);
        resize(&mut self.outputs, steps + 1);

        self.states[..d].copy_from_slice(x0);
        self.outputs[0] = sys.output(params, x0);
        for n in 0..steps {
            let u = inputs[n];
            let (done, rest) = self.states.split_at_mut((n + 1) * d);
            let x = &done[n * d..];
            let next = &mut rest[..d];
            let sx = &mut self.stage_x[n * 4 * d..(n + 1) * 4 * d];
            let sf = &mut self.stage_f[n * 4 * d..(n + 1) * 4 * d];
            let (s1, s234) = sx.split_at_mut(d);
            let (s2, s34) = s234.split_at_mut(d);
            let (s3, s4) = s34.split_at_mut(d);
            let (k1, k234) = sf.split_at_mut(d);
            let (k2, k34) = k234.split_at_mut(d);
            let (k3, k4) = k34.split_at_mut(d);

            s1.copy_from_slice(x);
            sys.rhs(params, s1, u, k1);
            for i in 0..d {
                s2[i] = x[i] + 0.5 * dt * k1[i];
            }
            sys.rhs(params, s2, u, k2);
            for i in 0..d {
                s3[i] = x[i] + 0.5 * dt * k2[i];
            }
            sys.rhs(params, s3, u, k3);
            for i in 0..d {
                s4[i] = x[i] + dt * k3[i];
            }
            sys.rhs(params, s4, u, k4);
            for i in 0..d {
                next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if !sf.iter().chain(next.iter()).all(|v| v.is_finite()) {
                return Err(Error::Integration { step: n });
            }
            self.outputs[n + 1] = sys.output(params, next);
        }
        Ok(())
    }

    /// Forward pass, loss, and reverse sweep. The gradient is written (not
    /// accumulated) into `grad`, whose length must equal `sys.param_dim()`.
    #[allow(clippy::too_many_arguments)]
    pub fn grad_into<D, L>(
        &mut self,
        sys: &D,
        params: &[f64],
        x0: &[f64],
        inputs: &[f64],
        grid: &Grid,
        loss: L,
        grad: &mut [f64],
    ) -> Result<f64>
    where
        D: Dynamics + ?Sized,
        L: FnOnce(&[f64], &mut [f64]) -> f64,
    {
        if grad.len() != sys.param_dim() {
            return Err(Error::Dimension { expected: sys.param_dim(), actual: grad.len() });
        }
        self.forward(sys, params, x0, inputs, grid)?;
        let d = self.dim;
        let steps = grid.steps();
        let dt = grid.dt();
        resize(&mut self.d_outputs, steps + 1);
        let value = loss(&self.outputs, &mut self.d_outputs);

        grad.fill(0.0);
        resize(&mut self.adj, d);
        resize(&mut self.adj_next, d);
        resize(&mut self.cot, 4 * d);
        resize(&mut self.g, d);

        let mut n = steps;
        loop {
            let x = &self.states[n * d..(n + 1) * d];
            sys.output_vjp(params, x, self.d_outputs[n], &mut self.adj, grad);
            if n == 0 {
                break;
            }
            let step = n - 1;
            let sx = &self.stage_x[step * 4 * d..(step + 1) * 4 * d];
            let sf = &self.stage_f[step * 4 * d..(step + 1) * 4 * d];
            let (c1, c234) = self.cot.split_at_mut(d);
            let (c2, c34) = c234.split_at_mut(d);
            let (c3, c4) = c34.split_at_mut(d);
            self.adj_next.copy_from_slice(&self.adj);
            for i in 0..d {
                let a = self.adj[i];
                c1[i] = dt / 6.0 * a;
                c2[i] = dt / 3.0 * a;
                c3[i] = dt / 3.0 * a;
                c4[i] = dt / 6.0 * a;
            }
            let u = inputs[step];
            let stage = |k: usize| (&sx[k * d..(k + 1) * d], &sf[k * d..(k + 1) * d]);

            let (s, f) = stage(3);
            self.g.fill(0.0);
            sys.rhs_vjp(params, s, u, f, c4, &mut self.g, grad);
            for i in 0..d {
                self.adj_next[i] += self.g[i];
                c3[i] += dt * self.g[i];
            }
            let (s, f) = stage(2);
            self.g.fill(0.0);
            sys.rhs_vjp(params, s, u, f, c3, &mut self.g, grad);
            for i in 0..d {
                self.adj_next[i] += self.g[i];
                c2[i] += 0.5 * dt * self.g[i];
            }
            let (s, f) = stage(1);
            self.g.fill(0.0);
            sys.rhs_vjp(params, s, u, f, c2, &mut self.g, grad);
            for i in 0..d {
                self.adj_next[i] += self.g[i];
                c1[i] += 0.5 * dt * self.g[i];
            }
            let (s, f) = stage(0);
            self.g.fill(0.0);
            sys.rhs_vjp(params, s, u, f, c1, &mut self.g, grad);
            for i in 0..d {
                self.adj[i] = self.adj_next[i] + self.g[i];
            }
            n -= 1;
        }

        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Gradient { index });
        }
        Ok(value)
    }
}

fn resize(buf: &mut Vec<f64>, len: usize) {
    buf.clear();
    buf.resize(len, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// dx/dt = -x, readout x.
    struct Decay;

    impl Dynamics for Decay {
        fn state_dim(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            0
        }
        fn rhs(&self, _: &[f64], x: &[f64], _: f64, dx: &mut [f64]) {
            dx[0] = -x[0];
        }
        fn rhs_vjp(&self, _: &[f64], _: &[f64], _: f64, _: &[f64], cot: &[f64], x_bar: &mut [f64], _: &mut [f64]) {
            x_bar[0] -= cot[0];
        }
        fn output(&self, _: &[f64], x: &[f64]) -> f64 {
            x[0]
        }
        fn output_vjp(&self, _: &[f64], _: &[f64], cot: f64, x_bar: &mut [f64], _: &mut [f64]) {
            x_bar[0] += cot;
        }
    }

    /// dx/dt = theta (constant field), readout x.
    struct Constant;

    impl Dynamics for Constant {
        fn state_dim(&self) -> usize {
            1
        }
        fn param_dim(&self) -> usize {
            1
        }
        fn rhs(&self, p: &[f64], _: &[f64], _: f64, dx: &mut [f64]) {
            dx[0] = p[0];
        }
        fn rhs_vjp(&self, _: &[f64], _: &[f64], _: f64, _: &[f64], cot: &[f64], _: &mut [f64], p_bar: &mut [f64]) {
            p_bar[0] += cot[0];
        }
        fn output(&self, _: &[f64], x: &[f64]) -> f64 {
            x[0]
        }
        fn output_vjp(&self, _: &[f64], _: &[f64], cot: f64, x_bar: &mut [f64], _: &mut [f64]) {
            x_bar[0] += cot;
        }
    }

    #[test]
    fn zero_field_keeps_initial_state() {
        struct Zero;
        impl Dynamics for Zero {
            fn state_dim(&self) -> usize {
                1
            }
            fn param_dim(&self) -> usize {
                0
            }
            fn rhs(&self, _: &[f64], _: &[f64], _: f64, dx: &mut [f64]) {
                dx[0] = 0.0;
            }
            fn rhs_vjp(&self, _: &[f64], _: &[f64], _: f64, _: &[f64], _: &[f64], _: &mut [f64], _: &mut [f64]) {}
            fn output(&self, _: &[f64], x: &[f64]) -> f64 {
                x[0]
            }
            fn output_vjp(&self, _: &[f64], _: &[f64], _: f64, _: &mut [f64], _: &mut [f64]) {}
        }
        let grid = Grid::with_duration(5.0).unwrap();
        let traj = rollout(&Zero, &[], &[0.0], &vec![0.0; 501], &grid).unwrap();
        assert_eq!(traj.len(), 501);
        assert!(traj.states().all(|s| s == [0.0]));
    }

    #[test]
    fn decay_two_steps_match_repeated_rk4_step() {
        let grid = Grid::with_duration(0.02).unwrap();
        let traj = rollout(&Decay, &[], &[1.0], &[0.0; 3], &grid).unwrap();
        let one = 1.0 + 0.01 / 6.0 * (-1.0 - 2.0 * 0.995 - 2.0 * 0.995025 - 0.99004975);
        assert_eq!(traj.state(0), [1.0]);
        assert!((traj.state(1)[0] - one).abs() < 1e-15);
        assert!((traj.state(2)[0] - one * one).abs() < 1e-15);
        assert!((traj.state(1)[0] - 0.990_049_83).abs() < 1e-8);
        assert!((traj.state(2)[0] - 0.980_198_67).abs() < 1e-8);
    }

    #[test]
    fn input_length_must_match_grid() {
        let grid = Grid::with_duration(0.02).unwrap();
        assert_eq!(
            rollout(&Decay, &[], &[1.0], &[0.0; 2], &grid),
            Err(Error::Shape { expected: 3, actual: 2 })
        );
    }

    #[test]
    fn constant_field_terminal_gradient_is_duration() {
        let grid = Grid::with_duration(0.5).unwrap();
        let inputs = vec![0.0; grid.len()];
        let r = rollout_grad(&Constant, &[0.7], &[0.0], &inputs, &grid, |y, dy| {
            dy.fill(0.0);
            dy[y.len() - 1] = 1.0;
            y[y.len() - 1]
        })
        .unwrap();
        assert!((r.loss - 0.35).abs() < 1e-12);
        assert!((r.grad[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn loss_without_parameter_dependence_has_zero_gradient() {
        let grid = Grid::with_duration(0.1).unwrap();
        let inputs = vec![0.0; grid.len()];
        let r = rollout_grad(&Constant, &[0.7], &[0.0], &inputs, &grid, |_, dy| {
            dy.fill(0.0);
            3.0
        })
        .unwrap();
        assert_eq!(r.grad, [0.0]);
    }

    #[test]
    fn rk4_global_error_ratio_is_fourth_order() {
        let err = |dt: f64| {
            let grid = Grid::new(0.0, 1.0, dt).unwrap();
            let traj = rollout(&Decay, &[], &[1.0], &vec![0.0; grid.len()], &grid).unwrap();
            (traj.last()[0] - libm::exp(-1.0)).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }
}

//! The plant-surrogate and controller neural ODEs.
//!
//! Flattening order for both nets is row-major `A1`, then `b1`, then `A2`
//! (a single row), then the scalar `b2`. Checkpoints use this order.
//!
//! Plant surrogate (latent dimension 9, input `u`):
//!
//! ```text
//! dξ/dt = tanh(A1 [ξ; u] + b1)
//! φ̂     = A2 ξ + b2
//! ```
//!
//! Controller (latent dimension 5, inputs measured angle `φ` and reference `φd`):
//!
//! ```text
//! dξ/dt = A1 [ξ; φ; φd] + b1
//! ū     = tanh(A2 ξ + b2)
//! u     = (u_max - u_min)(0.5 ū + 0.5) + u_min
//! ```

use rand::Rng as _;

use crate::ode::Dynamics;
use crate::rng;
use crate::{Error, Result};

pub const MODEL_LATENT: usize = 9;
pub const MODEL_INPUTS: usize = MODEL_LATENT + 1;
pub const MODEL_PARAMS: usize = MODEL_LATENT * MODEL_INPUTS + MODEL_LATENT + MODEL_LATENT + 1;

pub const CONTROLLER_LATENT: usize = 5;
pub const CONTROLLER_INPUTS: usize = CONTROLLER_LATENT + 2;
pub const CONTROLLER_PARAMS: usize =
    CONTROLLER_LATENT * CONTROLLER_INPUTS + CONTROLLER_LATENT + CONTROLLER_LATENT + 1;

const _: () = assert!(MODEL_PARAMS == 109);
const _: () = assert!(CONTROLLER_PARAMS == 46);

/// Feasible difference-pressure input interval [bar].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputRange {
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for InputRange {
    fn default() -> Self {
        Self { u_min: -6.0, u_max: 6.0 }
    }
}

impl InputRange {
    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }

    pub fn contains(&self, u: f64) -> bool {
        (self.u_min..=self.u_max).contains(&u)
    }
}

/// Feasible joint-angle interval [rad].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutputRange {
    pub phi_min: f64,
    pub phi_max: f64,
}

impl Default for OutputRange {
    fn default() -> Self {
        Self { phi_min: -1.0, phi_max: 1.0 }
    }
}

macro_rules! param_block {
    ($name:ident, $len:expr, $latent:expr, $inputs:expr) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            flat: [f64; $len],
        }

        impl $name {
            pub const LEN: usize = $len;
            const B1: usize = $latent * $inputs;
            const A2: usize = Self::B1 + $latent;
            const B2: usize = Self::A2 + $latent;

            pub fn zeros() -> Self {
                Self { flat: [0.0; $len] }
            }

            pub fn from_slice(values: &[f64]) -> Result<Self> {
                if values.len() != $len {
                    return Err(Error::Dimension { expected: $len, actual: values.len() });
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Config(alloc::format!("parameter {i} is not finite")));
                }
                let mut flat = [0.0; $len];
                flat.copy_from_slice(values);
                Ok(Self { flat })
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.flat
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.flat
            }

            /// `A1[row][col]`.
            pub fn a1(&self, row: usize, col: usize) -> f64 {
                self.flat[row * $inputs + col]
            }

            pub fn a1_mut(&mut self, row: usize, col: usize) -> &mut f64 {
                &mut self.flat[row * $inputs + col]
            }

            pub fn b1(&self) -> &[f64] {
                &self.flat[Self::B1..Self::A2]
            }

            pub fn b1_mut(&mut self) -> &mut [f64] {
                &mut self.flat[Self::B1..Self::A2]
            }

            pub fn a2(&self) -> &[f64] {
                &self.flat[Self::A2..Self::B2]
            }

            pub fn a2_mut(&mut self) -> &mut [f64] {
                &mut self.flat[Self::A2..Self::B2]
            }

            pub fn b2(&self) -> f64 {
                self.flat[Self::B2]
            }

            pub fn b2_mut(&mut self) -> &mut f64 {
                &mut self.flat[Self::B2]
            }

            /// Uniform fan-in scaled weights, zero biases; deterministic in `seed`.
            pub fn init(seed: u64) -> Self {
                let mut rng = rng::seeded(seed);
                let mut p = Self::zeros();
                let s1 = 1.0 / libm::sqrt($inputs as f64);
                for v in &mut p.flat[..Self::B1] {
                    *v = rng.random_range(-s1..s1);
                }
                let s2 = 1.0 / libm::sqrt($latent as f64);
                for v in &mut p.flat[Self::A2..Self::B2] {
                    *v = rng.random_range(-s2..s2);
                }
                p
            }
        }
    };
}

param_block!(ModelParams, MODEL_PARAMS, MODEL_LATENT, MODEL_INPUTS);
param_block!(ControllerParams, CONTROLLER_PARAMS, CONTROLLER_LATENT, CONTROLLER_INPUTS);

pub fn init_model_params(seed: u64) -> ModelParams {
    ModelParams::init(seed)
}

pub fn init_controller_params(seed: u64) -> ControllerParams {
    ControllerParams::init(seed)
}

/// Flat-slice views used by the differentiable code paths.
pub(crate) mod flat {
    use super::*;

    pub(crate) fn model_rhs(p: &[f64], xi: &[f64], u: f64, out: &mut [f64]) {
        let b1 = &p[ModelParams::B1..ModelParams::A2];
        for i in 0..MODEL_LATENT {
            let row = &p[i * MODEL_INPUTS..(i + 1) * MODEL_INPUTS];
            let mut a = b1[i] + row[MODEL_LATENT] * u;
            for j in 0..MODEL_LATENT {
                a += row[j] * xi[j];
            }
            out[i] = libm::tanh(a);
        }
    }

    /// `f` is `model_rhs` at the same point. Returns the cotangent of `u`.
    pub(crate) fn model_rhs_vjp(
        p: &[f64],
        xi: &[f64],
        u: f64,
        f: &[f64],
        cot: &[f64],
        xi_bar: &mut [f64],
        p_bar: Option<&mut [f64]>,
    ) -> f64 {
        let mut u_bar = 0.0;
        let mut delta = [0.0; MODEL_LATENT];
        for i in 0..MODEL_LATENT {
            delta[i] = cot[i] * (1.0 - f[i] * f[i]);
        }
        for i in 0..MODEL_LATENT {
            let row = &p[i * MODEL_INPUTS..(i + 1) * MODEL_INPUTS];
            let d = delta[i];
            for j in 0..MODEL_LATENT {
                xi_bar[j] += row[j] * d;
            }
            u_bar += row[MODEL_LATENT] * d;
        }
        if let Some(p_bar) = p_bar {
            for i in 0..MODEL_LATENT {
                let d = delta[i];
                let row = &mut p_bar[i * MODEL_INPUTS..(i + 1) * MODEL_INPUTS];
                for j in 0..MODEL_LATENT {
                    row[j] += d * xi[j];
                }
                row[MODEL_LATENT] += d * u;
                p_bar[ModelParams::B1 + i] += d;
            }
        }
        u_bar
    }

    pub(crate) fn model_output(p: &[f64], xi: &[f64]) -> f64 {
        let a2 = &p[ModelParams::A2..ModelParams::B2];
        let mut y = p[ModelParams::B2];
        for j in 0..MODEL_LATENT {
            y += a2[j] * xi[j];
        }
        y
    }

    pub(crate) fn model_output_vjp(p: &[f64], xi: &[f64], cot: f64, xi_bar: &mut [f64], p_bar: Option<&mut [f64]>) {
        let a2 = &p[ModelParams::A2..ModelParams::B2];
        for j in 0..MODEL_LATENT {
            xi_bar[j] += a2[j] * cot;
        }
        if let Some(p_bar) = p_bar {
            for j in 0..MODEL_LATENT {
                p_bar[ModelParams::A2 + j] += xi[j] * cot;
            }
            p_bar[ModelParams::B2] += cot;
        }
    }

    pub(crate) fn controller_rhs(p: &[f64], xi: &[f64], phi: f64, phi_d: f64, out: &mut [f64]) {
        let b1 = &p[ControllerParams::B1..ControllerParams::A2];
        for i in 0..CONTROLLER_LATENT {
            let row = &p[i * CONTROLLER_INPUTS..(i + 1) * CONTROLLER_INPUTS];
            let mut a = b1[i] + row[CONTROLLER_LATENT] * phi + row[CONTROLLER_LATENT + 1] * phi_d;
            for j in 0..CONTROLLER_LATENT {
                a += row[j] * xi[j];
            }
            out[i] = a;
        }
    }

    /// Returns the cotangent of the measured angle `phi`.
    pub(crate) fn controller_rhs_vjp(
        p: &[f64],
        xi: &[f64],
        phi: f64,
        phi_d: f64,
        cot: &[f64],
        xi_bar: &mut [f64],
        p_bar: &mut [f64],
    ) -> f64 {
        let mut phi_bar = 0.0;
        for i in 0..CONTROLLER_LATENT {
            let c = cot[i];
            let base = i * CONTROLLER_INPUTS;
            for j in 0..CONTROLLER_LATENT {
                xi_bar[j] += p[base + j] * c;
                p_bar[base + j] += c * xi[j];
            }
            phi_bar += p[base + CONTROLLER_LATENT] * c;
            p_bar[base + CONTROLLER_LATENT] += c * phi;
            p_bar[base + CONTROLLER_LATENT + 1] += c * phi_d;
            p_bar[ControllerParams::B1 + i] += c;
        }
        phi_bar
    }

    /// Pre-activation `A2 ξ + b2` of the controller output.
    pub(crate) fn controller_pre(p: &[f64], xi: &[f64]) -> f64 {
        let a2 = &p[ControllerParams::A2..ControllerParams::B2];
        let mut s = p[ControllerParams::B2];
        for j in 0..CONTROLLER_LATENT {
            s += a2[j] * xi[j];
        }
        s
    }

    pub(crate) fn scale_output(ubar: f64, range: &InputRange) -> f64 {
        (range.u_max - range.u_min) * (ubar * 0.5 + 0.5) + range.u_min
    }

    /// Cotangent flow through `u = scale(tanh(A2 ξ + b2))` given `u_bar`.
    pub(crate) fn controller_output_vjp(
        p: &[f64],
        xi: &[f64],
        range: &InputRange,
        u_bar: f64,
        xi_bar: &mut [f64],
        p_bar: &mut [f64],
    ) {
        let ubar = libm::tanh(controller_pre(p, xi));
        let s_bar = u_bar * 0.5 * (range.u_max - range.u_min) * (1.0 - ubar * ubar);
        for j in 0..CONTROLLER_LATENT {
            xi_bar[j] += p[ControllerParams::A2 + j] * s_bar;
            p_bar[ControllerParams::A2 + j] += s_bar * xi[j];
        }
        p_bar[ControllerParams::B2] += s_bar;
    }
}


pub fn model_rhs(params: &ModelParams, xi: &[f64; MODEL_LATENT], u: f64) -> [f64; MODEL_LATENT] {
    let mut out = [0.0; MODEL_LATENT];
    flat::model_rhs(&params.flat, xi, u, &mut out);
    out
}

pub fn model_output(params: &ModelParams, xi: &[f64; MODEL_LATENT]) -> f64 {
    flat::model_output(&params.flat, xi)
}

/// Linear latent dynamics of the controller; no activation on this layer.
pub fn controller_rhs(
    params: &ControllerParams,
    xi: &[f64; CONTROLLER_LATENT],
    phi: f64,
    phi_d: f64,
) -> [f64; CONTROLLER_LATENT] {
    let mut out = [0.0; CONTROLLER_LATENT];
    flat::controller_rhs(&params.flat, xi, phi, phi_d, &mut out);
    out
}

/// Saturated control output; always strictly inside `(u_min, u_max)` for finite latent states.
pub fn controller_output(params: &ControllerParams, xi: &[f64; CONTROLLER_LATENT], range: &InputRange) -> f64 {
    flat::scale_output(libm::tanh(flat::controller_pre(&params.flat, xi)), range)
}

/// The plant surrogate as a trainable [`Dynamics`]: parameters are `θm`,
/// the exogenous input is the applied pressure `u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelOde;

impl Dynamics for ModelOde {
    fn state_dim(&self) -> usize {
        MODEL_LATENT
    }

    fn param_dim(&self) -> usize {
        MODEL_PARAMS
    }

    fn rhs(&self, params: &[f64], x: &[f64], input: f64, dx: &mut [f64]) {
        flat::model_rhs(params, x, input, dx);
    }

    fn rhs_vjp(&self, params: &[f64], x: &[f64], input: f64, f: &[f64], cot: &[f64], x_bar: &mut [f64], p_bar: &mut [f64]) {
        flat::model_rhs_vjp(params, x, input, f, cot, x_bar, Some(p_bar));
    }

    fn output(&self, params: &[f64], x: &[f64]) -> f64 {
        flat::model_output(params, x)
    }

    fn output_vjp(&self, params: &[f64], x: &[f64], cot: f64, x_bar: &mut [f64], p_bar: &mut [f64]) {
        flat::model_output_vjp(params, x, cot, x_bar, Some(p_bar));
    }
}

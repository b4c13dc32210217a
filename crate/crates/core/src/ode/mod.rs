//! Differentiable trajectory engine: fixed-step RK4, reverse-mode gradients
//! through the unrolled rollout, Adam and global-norm gradient clipping.

mod adam;
mod clip;
mod rk4;
mod rollout;

pub use adam::{AdamConfig, AdamState};
pub use clip::{clip_global_norm, l2_norm};
pub use rk4::{rk4_step, NonFiniteStage};
pub use rollout::{rollout, rollout_grad, Dynamics, GradResult, RolloutWorkspace, Trajectory};

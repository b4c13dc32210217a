//! Automatic neural-ODE controller design for a hysteretic pneumatic actuator.
//!
//! The crate is `no_std` (with `alloc`). It holds the numerical pieces of the
//! pipeline: a differentiable fixed-step RK4 engine, the two neural ODE
//! parameterizations (plant surrogate and feedback controller), a synthetic
//! antagonistic-muscle plant, probing/reference signal generators, the two
//! training stages, a PI baseline and closed-loop evaluation. File formats,
//! configuration and the command line live in the `anodec` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod baseline;
pub mod batch;
pub mod error;
pub mod eval;
pub mod learn;
pub mod nets;
pub mod ode;
pub mod plant;
pub mod rng;
pub mod siggen;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{Grid, SampledSignal};

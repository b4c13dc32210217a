//! PI(D) baseline with output clipping and conditional anti-windup.

use crate::nets::InputRange;
use crate::signal::DEFAULT_DT;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PidConfig {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub dt: f64,
    pub output: InputRange,
    /// Skip the integrator update on steps whose unclipped output saturates.
    pub anti_windup: bool,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self { kp: 2.0, ki: 30.0, kd: 0.0, dt: DEFAULT_DT, output: InputRange::default(), anti_windup: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub config: PidConfig,
    /// Integral of the error [rad s].
    pub integral: f64,
    prev_error: Option<f64>,
}

impl PidState {
    pub fn new(config: PidConfig) -> Self {
        Self { config, integral: 0.0, prev_error: None }
    }

    /// Zero integrator with the tuned gains `(2, 30, 0)`.
    pub fn reset() -> Self {
        Self::new(PidConfig::default())
    }

    /// One control tick: returns the clipped output `u` [bar].
    pub fn step(&mut self, phi_d: f64, phi: f64) -> f64 {
        let c = self.config;
        let e = phi_d - phi;
        let integral = self.integral + e * c.dt;
        let derivative = match self.prev_error {
            Some(prev) if c.kd != 0.0 => (e - prev) / c.dt,
            _ => 0.0,
        };
        self.prev_error = Some(e);
        let raw = c.kp * e + c.ki * integral + c.kd * derivative;
        if !(c.anti_windup && !c.output.contains(raw)) {
            self.integral = integral;
        }
        c.output.clamp(raw)
    }

    /// Unclipped output for the next step without advancing the state.
    pub fn raw_output(&self, phi_d: f64, phi: f64) -> f64 {
        let c = self.config;
        let e = phi_d - phi;
        c.kp * e + c.ki * (self.integral + e * c.dt)
    }
}

pub fn pid_reset() -> PidState {
    PidState::reset()
}

pub fn pid_step(state: &mut PidState, phi_d: f64, phi: f64) -> f64 {
    state.step(phi_d, phi)
}

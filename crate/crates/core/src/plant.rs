//! Synthetic antagonistic pneumatic-muscle arm.
//!
//! Learning code only sees this module through a stream of inputs `u` [bar]
//! and measured angles [rad]. Internally the arm is a second-order rigid body
//! driven by two muscles whose pressures follow the commanded pressures with a
//! first-order lag. The muscle force map is nonlinear in contraction; a
//! Bouc–Wen element adds rate-independent hysteresis and a slow first-order
//! element adds creep under sustained pressure difference. An optional
//! gravity load turns on the second (loaded) configuration.
//!
//! ```text
//! dp_i/dt = (p_d,i - p_i) / τ_p
//! ε_1,2   = ε_0 ± r φ / L_0
//! F_i     = k_F p_i (1 - ε_i / ε_max)^2
//! dc/dt   = (c_frac (p_1 - p_2) - c) / τ_c
//! dz/dt   = (ω / φ_y) (α_h - (β_h sgn(z ω) + γ_h) |z|^n_h)
//! J dω/dt = r (F_1 - F_2) + r k_F a² c - k_h z - d ω [- m g L sin φ] + τ_ext
//! ```
//!
//! with `a = 1 - ε_0 / ε_max`. A hard stop holds `φ` inside the output range.

use alloc::format;

use rand_distr::{Distribution, Normal};

use crate::nets::{InputRange, OutputRange};
use crate::{Error, Result};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PlantConfig {
    /// Arm inertia about the hinge without the external load [kg m^2].
    pub inertia: f64,
    /// Viscous joint damping [N m s/rad].
    pub damping: f64,
    /// Pulley radius [m].
    pub pulley_radius: f64,
    /// Muscle rest length [m].
    pub muscle_length: f64,
    /// Force per unit pressure of an uncontracted muscle [N/bar].
    pub force_gain: f64,
    /// Contraction of both muscles at φ = 0 [-].
    pub rest_contraction: f64,
    /// Contraction at which a muscle produces no force [-].
    pub max_contraction: f64,
    pub hysteresis_alpha: f64,
    pub hysteresis_beta: f64,
    pub hysteresis_gamma: f64,
    pub hysteresis_exponent: f64,
    /// Angle scale over which the hysteresis state saturates [rad].
    pub hysteresis_yield_angle: f64,
    /// Torque per unit hysteresis state [N m].
    pub hysteresis_torque: f64,
    /// Creep time constant [s].
    pub creep_time_constant: f64,
    /// Steady-state creep as a fraction of the pressure difference [-].
    pub creep_fraction: f64,
    /// Pressure lag time constant [s].
    pub pressure_time_constant: f64,
    /// Mean pressure of the difference-pressure coupling [bar].
    pub mean_pressure: f64,
    /// Supply pressure [bar].
    pub supply_pressure: f64,
    pub gravity: bool,
    /// External load mass [kg].
    pub load_mass: f64,
    /// Lever arm of the external load [m].
    pub lever_arm: f64,
    /// Standard deviation of the angle sensor noise [rad].
    pub sensor_noise_std: f64,
    /// Trial duration [s].
    pub trial_duration: f64,
    /// Duration of the saturating input hold before each trial [s].
    pub settle_time: f64,
    /// Internal integration sub-steps per control step.
    pub substeps: usize,
    pub input_range: InputRange,
    pub output_range: OutputRange,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self::setup1()
    }
}

impl PlantConfig {
    /// Unloaded arm, 5 s trials.
    pub fn setup1() -> Self {
        Self {
            inertia: 0.05,
            damping: 0.6,
            pulley_radius: 0.012,
            muscle_length: 0.25,
            force_gain: 200.0,
            rest_contraction: 0.1,
            max_contraction: 0.25,
            hysteresis_alpha: 1.0,
            hysteresis_beta: 0.5,
            hysteresis_gamma: 0.5,
            hysteresis_exponent: 1.0,
            hysteresis_yield_angle: 0.04,
            hysteresis_torque: 0.5,
            creep_time_constant: 7.0,
            creep_fraction: 0.35,
            pressure_time_constant: 0.1,
            mean_pressure: 4.0,
            supply_pressure: 8.0,
            gravity: false,
            load_mass: 0.6,
            lever_arm: 0.25,
            sensor_noise_std: 0.002,
            trial_duration: 5.0,
            settle_time: 3.0,
            substeps: 4,
            input_range: InputRange::default(),
            output_range: OutputRange::default(),
        }
    }

    /// Gravity-loaded arm, 8 s trials.
    pub fn setup2() -> Self {
        Self { gravity: true, trial_duration: 8.0, ..Self::setup1() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inertia", self.inertia),
            ("pulley_radius", self.pulley_radius),
            ("muscle_length", self.muscle_length),
            ("max_contraction", self.max_contraction),
            ("hysteresis_yield_angle", self.hysteresis_yield_angle),
            ("creep_time_constant", self.creep_time_constant),
            ("pressure_time_constant", self.pressure_time_constant),
            ("supply_pressure", self.supply_pressure),
            ("trial_duration", self.trial_duration),
            ("settle_time", self.settle_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if self.sensor_noise_std < 0.0 {
            return Err(Error::Config("sensor_noise_std must be non-negative".into()));
        }
        let InputRange { u_min, u_max } = self.input_range;
        if !(u_min < u_max) {
            return Err(Error::Config("input range is empty".into()));
        }
        let OutputRange { phi_min, phi_max } = self.output_range;
        if !(phi_min < phi_max) {
            return Err(Error::Config("output range is empty".into()));
        }
        let half = 0.5 * u_min.abs().max(u_max.abs());
        if self.mean_pressure - half < 0.0 || self.mean_pressure + half > self.supply_pressure {
            return Err(Error::Config(format!(
                "mean pressure {} ± {half} leaves [0, {}]",
                self.mean_pressure, self.supply_pressure
            )));
        }
        Ok(())
    }

    fn total_inertia(&self) -> f64 {
        if self.gravity {
            self.inertia + self.load_mass * self.lever_arm * self.lever_arm
        } else {
            self.inertia
        }
    }
}

/// Full internal state of the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantState {
    /// Joint angle [rad].
    pub phi: f64,
    /// Angular velocity [rad/s].
    pub omega: f64,
    /// Muscle pressures [bar].
    pub p1: f64,
    pub p2: f64,
    /// Bouc–Wen hysteresis state [-].
    pub z: f64,
    /// Creep state, an equivalent pressure difference [bar].
    pub creep: f64,
}

impl PlantState {
    /// Symmetric rest: zero angle, both muscles at the mean pressure.
    pub fn rest(cfg: &PlantConfig) -> Self {
        Self { phi: 0.0, omega: 0.0, p1: cfg.mean_pressure, p2: cfg.mean_pressure, z: 0.0, creep: 0.0 }
    }

    fn to_array(self) -> [f64; 6] {
        [self.phi, self.omega, self.p1, self.p2, self.z, self.creep]
    }

    fn from_array(a: [f64; 6]) -> Self {
        Self { phi: a[0], omega: a[1], p1: a[2], p2: a[3], z: a[4], creep: a[5] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Euclidean distance between two states, for reset-invariance checks.
    pub fn distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        libm::sqrt(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum())
    }
}

/// Desired muscle pressures of the mean-pressure coupling, `p_m ± u/2`.
/// `u` is clipped to `range`; the flag reports whether clipping happened.
pub fn couple_pressures(u: f64, mean_pressure: f64, range: &InputRange) -> (f64, f64, bool) {
    let clipped = range.clamp(u);
    (mean_pressure + 0.5 * clipped, mean_pressure - 0.5 * clipped, clipped != u)
}

fn derivative(cfg: &PlantConfig, x: &[f64; 6], pd: (f64, f64), ext_torque: f64) -> [f64; 6] {
    let [phi, omega, p1, p2, z, creep] = *x;
    let r = cfg.pulley_radius;
    let stretch = r * phi / cfg.muscle_length;
    let e1 = cfg.rest_contraction + stretch;
    let e2 = cfg.rest_contraction - stretch;
    let f1 = cfg.force_gain * p1 * force_length(e1 / cfg.max_contraction);
    let f2 = cfg.force_gain * p2 * force_length(e2 / cfg.max_contraction);
    let a = 1.0 - cfg.rest_contraction / cfg.max_contraction;
    let creep_torque = r * cfg.force_gain * a * a * creep;

    let mut torque = r * (f1 - f2) + creep_torque - cfg.hysteresis_torque * z - cfg.damping * omega + ext_torque;
    if cfg.gravity {
        torque -= cfg.load_mass * GRAVITY * cfg.lever_arm * libm::sin(phi);
    }
    let mut accel = torque / cfg.total_inertia();
    let phi_range = cfg.output_range;
    if (phi >= phi_range.phi_max && omega >= 0.0 && accel > 0.0)
        || (phi <= phi_range.phi_min && omega <= 0.0 && accel < 0.0)
    {
        accel = 0.0;
    }

    let sgn = if z * omega >= 0.0 { 1.0 } else { -1.0 };
    let zdot = omega / cfg.hysteresis_yield_angle
        * (cfg.hysteresis_alpha
            - (cfg.hysteresis_beta * sgn + cfg.hysteresis_gamma) * libm::pow(libm::fabs(z), cfg.hysteresis_exponent));

    let tp = cfg.pressure_time_constant;
    [
        omega,
        accel,
        (pd.0 - p1) / tp,
        (pd.1 - p2) / tp,
        zdot,
        (cfg.creep_fraction * (p1 - p2) - creep) / cfg.creep_time_constant,
    ]
}

/// Normalized force-length factor; zero beyond maximal contraction.
fn force_length(ratio: f64) -> f64 {
    let s = (1.0 - ratio).max(0.0);
    s * s
}

fn hard_stop(x: &mut [f64; 6], range: &OutputRange) {
    if x[0] > range.phi_max {
        x[0] = range.phi_max;
        x[1] = x[1].min(0.0);
    } else if x[0] < range.phi_min {
        x[0] = range.phi_min;
        x[1] = x[1].max(0.0);
    }
}

/// Advance the arm by one control interval `dt` with `u` held, plus an
/// external joint torque `ext_torque` [N m].
pub fn plant_step_with_torque(
    state: &PlantState,
    u: f64,
    ext_torque: f64,
    dt: f64,
    cfg: &PlantConfig,
) -> core::result::Result<PlantState, PlantState> {
    let (pd1, pd2, _) = couple_pressures(u, cfg.mean_pressure, &cfg.input_range);
    let pd = (pd1.clamp(0.0, cfg.supply_pressure), pd2.clamp(0.0, cfg.supply_pressure));
    let h = dt / cfg.substeps as f64;
    let mut x = state.to_array();
    for _ in 0..cfg.substeps {
        let k1 = derivative(cfg, &x, pd, ext_torque);
        let k2 = derivative(cfg, &axpy(&x, 0.5 * h, &k1), pd, ext_torque);
        let k3 = derivative(cfg, &axpy(&x, 0.5 * h, &k2), pd, ext_torque);
        let k4 = derivative(cfg, &axpy(&x, h, &k3), pd, ext_torque);
        for i in 0..6 {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        hard_stop(&mut x, &cfg.output_range);
        x[2] = x[2].clamp(0.0, cfg.supply_pressure);
        x[3] = x[3].clamp(0.0, cfg.supply_pressure);
    }
    let next = PlantState::from_array(x);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(next)
    }
}

/// Advance the arm by one control interval with `u` held.
pub fn plant_step(state: &PlantState, u: f64, dt: f64, cfg: &PlantConfig) -> Result<PlantState> {
    plant_step_with_torque(state, u, 0.0, dt, cfg).map_err(|s| Error::PlantFault { step: 0, state: format!("{s:?}") })
}

fn axpy(x: &[f64; 6], a: f64, k: &[f64; 6]) -> [f64; 6] {
    core::array::from_fn(|i| x[i] + a * k[i])
}

/// Drive the arm into the upper saturation with `u_max` held for the settle
/// time, starting from the symmetric rest state. Deterministic.
pub fn reset_to_saturation(cfg: &PlantConfig) -> PlantState {
    let dt = crate::signal::DEFAULT_DT;
    let n = libm::round(cfg.settle_time / dt) as usize;
    let mut s = PlantState::rest(cfg);
    for _ in 0..n {
        s = match plant_step_with_torque(&s, cfg.input_range.u_max, 0.0, dt, cfg) {
            Ok(s) | Err(s) => s,
        };
    }
    s
}

/// Noisy angle sensor.
pub fn measure<R: rand::Rng + ?Sized>(state: &PlantState, noise_std: f64, rng: &mut R) -> f64 {
    if noise_std > 0.0 {
        let n = Normal::new(0.0, noise_std).expect("finite positive std");
        state.phi + n.sample(rng)
    } else {
        // keep the stream position independent of the noise level
        let _: f64 = rng.random();
        state.phi
    }
}

/// Stateful stepper around [`plant_step_with_torque`] that counts clipped inputs
/// and reports faults with the step index.
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: PlantConfig,
    state: PlantState,
    step: usize,
    clipped_inputs: u64,
}

impl Plant {
    pub fn new(cfg: PlantConfig) -> Result<Self> {
        cfg.validate()?;
        let state = PlantState::rest(&cfg);
        Ok(Self { cfg, state, step: 0, clipped_inputs: 0 })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn set_state(&mut self, state: PlantState) {
        self.state = state;
    }

    pub fn clipped_inputs(&self) -> u64 {
        self.clipped_inputs
    }

    pub fn reset(&mut self) {
        self.state = reset_to_saturation(&self.cfg);
        self.step = 0;
    }

    pub fn step(&mut self, u: f64, dt: f64) -> Result<&PlantState> {
        self.step_with_torque(u, 0.0, dt)
    }

    pub fn step_with_torque(&mut self, u: f64, ext_torque: f64, dt: f64) -> Result<&PlantState> {
        if couple_pressures(u, self.cfg.mean_pressure, &self.cfg.input_range).2 {
            self.clipped_inputs += 1;
        }
        match plant_step_with_torque(&self.state, u, ext_torque, dt, &self.cfg) {
            Ok(s) => {
                self.state = s;
                self.step += 1;
                Ok(&self.state)
            }
            Err(s) => Err(Error::PlantFault { step: self.step, state: format!("{s:?}") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const DT: f64 = 0.01;

    fn hold(cfg: &PlantConfig, mut s: PlantState, u: f64, seconds: f64) -> PlantState {
        for _ in 0..libm::round(seconds / DT) as usize {
            s = plant_step(&s, u, DT, cfg).unwrap();
        }
        s
    }

    #[test]
    fn coupling_is_symmetric() {
        let r = InputRange::default();
        assert_eq!(couple_pressures(0.0, 4.0, &r), (4.0, 4.0, false));
        assert_eq!(couple_pressures(6.0, 4.0, &r), (7.0, 1.0, false));
        assert_eq!(couple_pressures(-6.0, 4.0, &r), (1.0, 7.0, false));
        assert_eq!(couple_pressures(9.0, 4.0, &r), (7.0, 1.0, true));
    }

    #[test]
    fn clipped_inputs_are_counted() {
        let mut p = Plant::new(PlantConfig::setup1()).unwrap();
        p.step(7.0, DT).unwrap();
        p.step(3.0, DT).unwrap();
        p.step(-6.5, DT).unwrap();
        assert_eq!(p.clipped_inputs(), 2);
    }

    #[test]
    fn rest_is_an_equilibrium() {
        let cfg = PlantConfig::setup1();
        let s = hold(&cfg, PlantState::rest(&cfg), 0.0, 5.0);
        assert!(s.phi.abs() < 1e-6);
    }

    #[test]
    fn full_input_drives_to_upper_stop() {
        let cfg = PlantConfig::setup1();
        let mut s = PlantState::rest(&cfg);
        let mut prev = s.phi;
        let mut trace = alloc::vec::Vec::new();
        for _ in 0..500 {
            s = plant_step(&s, 6.0, DT, &cfg).unwrap();
            trace.push(s.phi);
        }
        // calibrated regression value: the arm rests on the upper stop
        assert_eq!(s.phi, cfg.output_range.phi_max);
        // monotone after the initial transient
        for &phi in &trace[150..] {
            assert!(phi >= prev - 1e-9 || phi >= 0.95);
            prev = phi;
        }
    }

    #[test]
    fn reset_reaches_upper_saturation_deterministically() {
        for cfg in [PlantConfig::setup1(), PlantConfig::setup2()] {
            let a = reset_to_saturation(&cfg);
            assert!((a.phi - cfg.output_range.phi_max).abs() <= 0.05, "phi {}", a.phi);
            for _ in 0..10 {
                assert!(reset_to_saturation(&cfg).distance(&a) < 1e-9);
            }
        }
    }

    #[test]
    fn zero_input_after_reset_creeps() {
        let cfg = PlantConfig::setup1();
        let s = hold(&cfg, reset_to_saturation(&cfg), 0.0, 1.5);
        let later = hold(&cfg, s, 0.0, 5.0);
        assert!((later.phi - s.phi).abs() > 0.0);
    }

    #[test]
    fn pressure_lag_decays_within_five_time_constants() {
        let cfg = PlantConfig::setup1();
        let s = hold(&cfg, PlantState::rest(&cfg), 4.0, 5.0 * cfg.pressure_time_constant);
        let (pd1, pd2, _) = couple_pressures(4.0, cfg.mean_pressure, &cfg.input_range);
        assert!((s.p1 - pd1).abs() < 0.05 * 2.0);
        assert!((s.p2 - pd2).abs() < 0.05 * 2.0);
    }

    #[test]
    fn hard_stop_bounds_angle() {
        let cfg = PlantConfig::setup1();
        let mut s = PlantState::rest(&cfg);
        for n in 0..2000 {
            let u = if (n / 100) % 2 == 0 { 6.0 } else { -6.0 };
            s = plant_step_with_torque(&s, u, 5.0, DT, &cfg).unwrap();
            assert!(s.phi.abs() <= 1.0);
        }
    }

    #[test]
    fn measurement_noise() {
        let s = PlantState { phi: 0.3, ..PlantState::rest(&PlantConfig::setup1()) };
        let mut r = rng::seeded(1);
        assert_eq!(measure(&s, 0.0, &mut r), 0.3);
        let a: alloc::vec::Vec<f64> = (0..5).map(|_| measure(&s, 0.002, &mut rng::seeded(9))).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r = rng::seeded(2);
        let n = 10_000;
        let mean = (0..n).map(|_| measure(&s, 0.002, &mut r)).sum::<f64>() / n as f64;
        assert!((mean - 0.3).abs() < 3.0 * 0.002 / 100.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = PlantConfig { pressure_time_constant: 0.0, ..PlantConfig::setup1() };
        assert!(cfg.validate().is_err());
        let cfg = PlantConfig { mean_pressure: 6.0, ..PlantConfig::setup1() };
        assert!(cfg.validate().is_err());
        assert!(PlantConfig::setup2().validate().is_ok());
    }
}

//! Closed-loop evaluation on the plant: streamed reference tracking,
//! disturbance trials, and paired multi-controller suites.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;

use crate::baseline::{PidConfig, PidState};
use crate::batch::{BatchExecutor, Sequential};
use crate::nets::{self, ControllerParams, InputRange, CONTROLLER_LATENT};
use crate::plant::{measure, plant_step_with_torque, reset_to_saturation, PlantConfig, PlantState};
use crate::siggen::{draw_cubic_spline_reference, draw_double_step_reference, draw_step_reference};
use crate::{rng, Error, Grid, Result, SampledSignal};

/// A controller that receives one `(reference, measurement)` pair per tick
/// and answers with the input to apply over the next interval. Nothing about
/// future samples is available through this interface.
pub trait FeedbackController {
    fn reset(&mut self);
    fn step(&mut self, phi_d: f64, phi_measured: f64) -> f64;
}

impl FeedbackController for PidState {
    fn reset(&mut self) {
        *self = PidState::new(self.config);
    }

    fn step(&mut self, phi_d: f64, phi_measured: f64) -> f64 {
        PidState::step(self, phi_d, phi_measured)
    }
}

/// The learned controller run in real time: the emitted input is the output
/// map of the current latent state, after which the latent state advances by
/// one RK4 step with the current reference and measurement held.
#[derive(Debug, Clone)]
pub struct AnodecController {
    params: ControllerParams,
    range: InputRange,
    dt: f64,
    xi: [f64; CONTROLLER_LATENT],
}

impl AnodecController {
    pub fn new(params: ControllerParams, range: InputRange, dt: f64) -> Self {
        Self { params, range, dt, xi: [0.0; CONTROLLER_LATENT] }
    }

    pub fn latent(&self) -> &[f64; CONTROLLER_LATENT] {
        &self.xi
    }
}

impl FeedbackController for AnodecController {
    fn reset(&mut self) {
        self.xi = [0.0; CONTROLLER_LATENT];
    }

    fn step(&mut self, phi_d: f64, phi_measured: f64) -> f64 {
        let u = nets::controller_output(&self.params, &self.xi, &self.range);
        let f = |x: &[f64; CONTROLLER_LATENT]| nets::controller_rhs(&self.params, x, phi_measured, phi_d);
        let h = self.dt;
        let x = self.xi;
        let k1 = f(&x);
        let k2 = f(&core::array::from_fn(|i| x[i] + 0.5 * h * k1[i]));
        let k3 = f(&core::array::from_fn(|i| x[i] + 0.5 * h * k2[i]));
        let k4 = f(&core::array::from_fn(|i| x[i] + h * k3[i]));
        self.xi = core::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        u
    }
}

/// Plain-data description of a controller, so suites can build fresh
/// instances per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub id: String,
    pub kind: ControllerKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerKind {
    Anodec { params: ControllerParams, range: InputRange },
    Pid(PidConfig),
}

impl ControllerSpec {
    pub fn anodec(id: &str, params: ControllerParams, range: InputRange) -> Self {
        Self { id: id.to_string(), kind: ControllerKind::Anodec { params, range } }
    }

    pub fn pid(id: &str, config: PidConfig) -> Self {
        Self { id: id.to_string(), kind: ControllerKind::Pid(config) }
    }

    pub fn build(&self, dt: f64) -> Box<dyn FeedbackController> {
        match &self.kind {
            ControllerKind::Anodec { params, range } => Box::new(AnodecController::new(params.clone(), *range, dt)),
            ControllerKind::Pid(cfg) => Box::new(PidState::new(PidConfig { dt, ..*cfg })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DisturbanceKind {
    /// External joint torque [N m] for the event duration.
    ImpulseTorque,
    /// Angle pinned and velocity zeroed for the event duration.
    HoldClamp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceEvent {
    pub start: f64,
    pub duration: f64,
    pub kind: DisturbanceKind,
    pub magnitude: f64,
}

impl DisturbanceEvent {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    fn active(&self, t: f64) -> bool {
        // half-open interval, tolerant to grid rounding
        t >= self.start - 1e-9 && t < self.end() - 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceSchedule {
    pub events: Vec<DisturbanceEvent>,
}

impl DisturbanceSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, duration: f64) -> Result<()> {
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.start.total_cmp(&b.start));
        for e in &events {
            if e.start < 0.0 || e.duration < 0.0 || e.end() > duration + 1e-9 {
                return Err(Error::Config(alloc::format!("disturbance {e:?} outside [0, {duration}]")));
            }
        }
        if events.windows(2).any(|w| w[1].start < w[0].end() - 1e-9) {
            return Err(Error::Config("disturbance events overlap".into()));
        }
        Ok(())
    }

    pub fn active(&self, t: f64) -> Option<&DisturbanceEvent> {
        self.events.iter().find(|e| e.active(t))
    }

    /// `count` events of one kind, centred at `T k / (count + 1)`, with
    /// alternating magnitude sign.
    pub fn evenly_spaced(duration: f64, count: usize, event_duration: f64, kind: DisturbanceKind, magnitude: f64) -> Self {
        let events = (1..=count)
            .map(|k| DisturbanceEvent {
                start: duration * k as f64 / (count + 1) as f64 - 0.5 * event_duration,
                duration: event_duration,
                kind,
                magnitude: if k % 2 == 1 { magnitude } else { -magnitude },
            })
            .collect();
        Self { events }
    }
}

/// Disturbed-trial settings: two torque pulses in one trial, four clamps in another.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct DisturbanceConfig {
    /// Pulse torque [N m].
    pub impulse_torque: f64,
    /// Pulse length [s].
    pub impulse_duration: f64,
    /// Hold length [s].
    pub clamp_duration: f64,
    /// Length of a disturbed trial [s].
    pub trial_duration: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self { impulse_torque: 2.0, impulse_duration: 0.05, clamp_duration: 0.5, trial_duration: 12.0 }
    }
}

impl DisturbanceConfig {
    pub fn impulse_schedule(&self) -> DisturbanceSchedule {
        DisturbanceSchedule::evenly_spaced(
            self.trial_duration,
            2,
            self.impulse_duration,
            DisturbanceKind::ImpulseTorque,
            self.impulse_torque,
        )
    }

    pub fn clamp_schedule(&self) -> DisturbanceSchedule {
        DisturbanceSchedule::evenly_spaced(self.trial_duration, 4, self.clamp_duration, DisturbanceKind::HoldClamp, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.impulse_duration > 0.0 && self.clamp_duration > 0.0 && self.trial_duration > 0.0) {
            return Err(Error::Config("disturbance durations must be positive".into()));
        }
        self.impulse_schedule().validate(self.trial_duration)?;
        self.clamp_schedule().validate(self.trial_duration)
    }
}

/// Apply an active event to the plant state before a control interval.
/// Returns the (possibly pinned) state and the external torque to apply.
/// `anchor` is the angle at which a clamp holds the joint.
pub fn apply_disturbance(state: &PlantState, event: &DisturbanceEvent, anchor: f64) -> (PlantState, f64) {
    match event.kind {
        DisturbanceKind::ImpulseTorque => (*state, event.magnitude),
        DisturbanceKind::HoldClamp => (PlantState { phi: anchor, omega: 0.0, ..*state }, 0.0),
    }
}

/// Root-mean-square tracking error in degrees.
pub fn rmse_deg(reference: &SampledSignal, measured: &SampledSignal) -> Result<f64> {
    reference.ensure_same_grid(measured)?;
    let n = reference.len() as f64;
    let ms = reference.values().iter().zip(measured.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    Ok(libm::sqrt(ms).to_degrees())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub controller: String,
    pub reference: SampledSignal,
    /// Noiseless joint angle.
    pub phi: SampledSignal,
    pub measured: SampledSignal,
    pub u: SampledSignal,
    pub disturbances: DisturbanceSchedule,
    /// RMSE between reference and the noiseless angle [deg].
    pub rmse_deg: f64,
}

/// Tracking error around one disturbance event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecovery {
    /// RMS tracking error over the window before the event [rad].
    pub pre_rms: f64,
    /// Error level the trailing-window RMS must fall below [rad].
    pub bound: f64,
    /// Peak tracking error from event start to the end of the horizon [rad].
    pub peak: f64,
    /// Time after release until the trailing-window RMS error is below
    /// `bound` [s]; `None` if that does not happen within the horizon.
    pub recovery: Option<f64>,
}

/// Recovery of the noiseless tracking error after `event`.
///
/// The pre-event level is the RMS error over `pre_window` seconds before the
/// event start. After release, the error is smoothed by a trailing RMS over
/// `smoothing` seconds and compared to `factor · pre_rms`.
pub fn event_recovery(
    record: &TrialRecord,
    event: &DisturbanceEvent,
    pre_window: f64,
    smoothing: f64,
    factor: f64,
    horizon: f64,
) -> EventRecovery {
    let grid = record.phi.grid();
    let dt = grid.dt();
    let err: Vec<f64> =
        record.reference.values().iter().zip(record.phi.values()).map(|(r, p)| libm::fabs(r - p)).collect();
    let last = err.len() - 1;
    let index = |t: f64| (libm::round((t - grid.t0()) / dt).max(0.0) as usize).min(last);
    let rms = |a: usize, b: usize| {
        let w = &err[a..=b];
        libm::sqrt(w.iter().map(|e| e * e).sum::<f64>() / w.len() as f64)
    };
    let start = index(event.start);
    let pre_rms = if start == 0 { 0.0 } else { rms(index(event.start - pre_window), start - 1) };
    let bound = factor * pre_rms;
    let release = index(event.end());
    let end = index(event.end() + horizon);
    let peak = err[start..=end].iter().copied().fold(0.0, f64::max);
    let w = (libm::round(smoothing / dt) as usize).max(1);
    let recovery = (release..=end)
        .find(|&n| rms((n + 1).saturating_sub(w), n) < bound)
        .map(|n| (n - release) as f64 * dt);
    EventRecovery { pre_rms, bound, peak, recovery }
}

/// Run one closed-loop trial from the saturation reset, streaming the
/// reference tick by tick.
pub fn run_trial(
    plant: &PlantConfig,
    controller_id: &str,
    controller: &mut dyn FeedbackController,
    reference: &SampledSignal,
    disturbances: &DisturbanceSchedule,
    noise_seed: u64,
) -> Result<TrialRecord> {
    let start = reset_to_saturation(plant);
    run_trial_from(plant, start, controller_id, controller, reference, disturbances, noise_seed)
}

/// [`run_trial`] from an explicit initial plant state.
pub fn run_trial_from(
    plant: &PlantConfig,
    start: PlantState,
    controller_id: &str,
    controller: &mut dyn FeedbackController,
    reference: &SampledSignal,
    disturbances: &DisturbanceSchedule,
    noise_seed: u64,
) -> Result<TrialRecord> {
    let grid = *reference.grid();
    disturbances.validate(grid.duration())?;
    let mut noise = rng::seeded(noise_seed);
    let mut state = start;
    controller.reset();
    let n_samples = grid.len();
    let (mut phi, mut measured, mut us) =
        (Vec::with_capacity(n_samples), Vec::with_capacity(n_samples), Vec::with_capacity(n_samples));
    let mut anchor: Option<f64> = None;
    for (n, &phi_d) in reference.values().iter().enumerate() {
        let y = measure(&state, plant.sensor_noise_std, &mut noise);
        let u = controller.step(phi_d, y);
        phi.push(state.phi);
        measured.push(y);
        us.push(u);
        if n == grid.steps() {
            break;
        }
        let t = grid.time(n);
        let mut torque = 0.0;
        let event = disturbances.active(t);
        if let Some(e) = event {
            let a = *anchor.get_or_insert(state.phi);
            let (pinned, tau) = apply_disturbance(&state, e, a);
            state = pinned;
            torque = tau;
        } else {
            anchor = None;
        }
        state = plant_step_with_torque(&state, u, torque, grid.dt(), plant)
            .map_err(|s| Error::PlantFault { step: n, state: alloc::format!("{s:?}") })?;
        if let (Some(e), Some(a)) = (event, anchor) {
            if e.kind == DisturbanceKind::HoldClamp {
                state = apply_disturbance(&state, e, a).0;
            }
        }
    }
    let phi = SampledSignal::new(grid, phi)?;
    let rmse = rmse_deg(reference, &phi)?;
    Ok(TrialRecord {
        controller: controller_id.to_string(),
        reference: reference.clone(),
        phi,
        measured: SampledSignal::new(grid, measured)?,
        u: SampledSignal::new(grid, us)?,
        disturbances: disturbances.clone(),
        rmse_deg: rmse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Distribution {
    Step,
    DoubleStep,
    CubicSpline,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Step, Distribution::DoubleStep, Distribution::CubicSpline];

    pub fn label(&self) -> &'static str {
        match self {
            Distribution::Step => "step",
            Distribution::DoubleStep => "double-step",
            Distribution::CubicSpline => "cubic-spline",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label() == s)
    }

    pub fn draw(&self, grid: &Grid, range: &nets::OutputRange, seed: u64) -> SampledSignal {
        match self {
            Distribution::Step => draw_step_reference(grid, range, seed),
            Distribution::DoubleStep => draw_double_step_reference(grid, range, seed),
            Distribution::CubicSpline => draw_cubic_spline_reference(grid, range, seed),
        }
    }

    fn index(&self) -> u64 {
        *self as u64
    }
}

/// Number of reference draws per distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SuiteCounts {
    pub steps: usize,
    pub double_steps: usize,
    pub splines: usize,
}

impl SuiteCounts {
    pub fn setup1() -> Self {
        Self { steps: 2, double_steps: 2, splines: 12 }
    }

    pub fn setup2() -> Self {
        Self { steps: 2, double_steps: 2, splines: 4 }
    }

    pub fn get(&self, d: Distribution) -> usize {
        match d {
            Distribution::Step => self.steps,
            Distribution::DoubleStep => self.double_steps,
            Distribution::CubicSpline => self.splines,
        }
    }

    pub fn total(&self) -> usize {
        self.steps + self.double_steps + self.splines
    }
}

/// One reference realization of a suite, shared by every controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub distribution: Distribution,
    pub index: usize,
    pub reference_seed: u64,
    pub noise_seed: u64,
    pub reference: SampledSignal,
}

/// Deterministic reference cases for a suite seed.
pub fn suite_cases(grid: &Grid, range: &nets::OutputRange, counts: &SuiteCounts, seed: u64) -> Vec<SuiteCase> {
    let mut cases = Vec::with_capacity(counts.total());
    for d in Distribution::ALL {
        let mut seeds = rng::stream(seed, d.index());
        for index in 0..counts.get(d) {
            let reference_seed: u64 = seeds.random();
            let noise_seed: u64 = seeds.random();
            let reference = d.draw(grid, range, reference_seed);
            cases.push(SuiteCase { distribution: d, index, reference_seed, noise_seed, reference });
        }
    }
    cases
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SummaryRow {
    pub distribution: Distribution,
    pub controller: String,
    pub n: usize,
    pub mean_rmse_deg: f64,
    pub std_rmse_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteTrial {
    pub distribution: Distribution,
    pub index: usize,
    pub reference_seed: u64,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteFailure {
    pub distribution: Distribution,
    pub index: usize,
    pub controller: String,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub summary: Vec<SummaryRow>,
    pub trials: Vec<SuiteTrial>,
    pub failures: Vec<SuiteFailure>,
}

impl SuiteReport {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn row(&self, distribution: Distribution, controller: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.distribution == distribution && r.controller == controller)
    }

    /// Mean RMSE over every trial of one controller.
    pub fn overall_mean(&self, controller: &str) -> Option<f64> {
        let v: Vec<f64> =
            self.trials.iter().filter(|t| t.record.controller == controller).map(|t| t.record.rmse_deg).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

pub fn evaluate_suite(
    plant: &PlantConfig,
    controllers: &[ControllerSpec],
    counts: &SuiteCounts,
    seed: u64,
) -> Result<SuiteReport> {
    evaluate_suite_with(plant, controllers, counts, seed, &Sequential)
}

/// Present the same reference realizations to every controller and collect
/// per-distribution RMSE statistics.
pub fn evaluate_suite_with<E: BatchExecutor>(
    plant: &PlantConfig,
    controllers: &[ControllerSpec],
    counts: &SuiteCounts,
    seed: u64,
    exec: &E,
) -> Result<SuiteReport> {
    plant.validate()?;
    let grid = Grid::with_duration(plant.trial_duration)?;
    let cases = suite_cases(&grid, &plant.output_range, counts, seed);
    let jobs: Vec<(&SuiteCase, &ControllerSpec)> =
        controllers.iter().flat_map(|c| cases.iter().map(move |case| (case, c))).collect();
    let results = exec.map_with(
        &jobs,
        || (),
        |_, (case, spec)| {
            let mut ctrl = spec.build(grid.dt());
            run_trial(plant, &spec.id, ctrl.as_mut(), &case.reference, &DisturbanceSchedule::none(), case.noise_seed)
        },
    );
    let mut report = SuiteReport::default();
    for ((case, spec), result) in jobs.iter().zip(results) {
        match result {
            Ok(record) => report.trials.push(SuiteTrial {
                distribution: case.distribution,
                index: case.index,
                reference_seed: case.reference_seed,
                record,
            }),
            Err(e) => report.failures.push(SuiteFailure {
                distribution: case.distribution,
                index: case.index,
                controller: spec.id.clone(),
                cause: e.to_string(),
            }),
        }
    }
    for spec in controllers {
        for d in Distribution::ALL {
            let rmses: Vec<f64> = report
                .trials
                .iter()
                .filter(|t| t.distribution == d && t.record.controller == spec.id)
                .map(|t| t.record.rmse_deg)
                .collect();
            let (mean, std) = mean_std(&rmses);
            report.summary.push(SummaryRow {
                distribution: d,
                controller: spec.id.clone(),
                n: rmses.len(),
                mean_rmse_deg: mean,
                std_rmse_deg: std,
            });
        }
    }
    Ok(report)
}

//! Model learning from input-output data and controller learning on the
//! frozen model.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::batch::{BatchExecutor, Sequential};
use crate::nets::{
    self, flat, ControllerParams, InputRange, ModelOde, ModelParams, OutputRange, CONTROLLER_LATENT,
    MODEL_LATENT,
};
use crate::ode::{clip_global_norm, l2_norm, AdamConfig, AdamState, Dynamics, RolloutWorkspace};
use crate::plant::{measure, Plant, PlantConfig};
use crate::{rng, Error, Grid, Result, SampledSignal};

pub const TRAIN_TRIALS: usize = 5;
pub const DATASET_TRIALS: usize = TRAIN_TRIALS + 1;

/// One probing trial: applied input, true angle and measured angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub input: SampledSignal,
    pub phi: SampledSignal,
    pub measured: SampledSignal,
}

/// Six trials on a common grid; the first five train, the last validates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    trials: Vec<Trial>,
}

impl Dataset {
    pub fn new(trials: Vec<Trial>, input_range: &InputRange, output_range: &OutputRange) -> Result<Self> {
        if trials.len() != DATASET_TRIALS {
            return Err(Error::Dataset(alloc::format!("expected {DATASET_TRIALS} trials, got {}", trials.len())));
        }
        let grid = *trials[0].input.grid();
        for (i, t) in trials.iter().enumerate() {
            if *t.input.grid() != grid || *t.measured.grid() != grid || *t.phi.grid() != grid {
                return Err(Error::Dataset(alloc::format!("trial {i} is not on the common grid")));
            }
            if !t.input.values().iter().all(|u| input_range.contains(*u)) {
                return Err(Error::Dataset(alloc::format!("trial {i} input leaves the feasible range")));
            }
            if !t.phi.values().iter().all(|p| (output_range.phi_min..=output_range.phi_max).contains(p)) {
                return Err(Error::Dataset(alloc::format!("trial {i} angle leaves the feasible range")));
            }
        }
        Ok(Self { trials })
    }

    pub fn grid(&self) -> &Grid {
        self.trials[0].input.grid()
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn train(&self) -> &[Trial] {
        &self.trials[..TRAIN_TRIALS]
    }

    pub fn validation(&self) -> &Trial {
        &self.trials[TRAIN_TRIALS]
    }

    /// Total simulated interaction time [s].
    pub fn interaction_time(&self) -> f64 {
        self.trials.len() as f64 * self.grid().duration()
    }
}

/// Run every probing input on the plant from the saturation reset and log
/// the measured response at the control rate.
pub fn collect_dataset(cfg: &PlantConfig, plan: &[SampledSignal], seed: u64) -> Result<Dataset> {
    if plan.len() != DATASET_TRIALS {
        return Err(Error::Dataset(alloc::format!("plan must hold {DATASET_TRIALS} inputs, got {}", plan.len())));
    }
    let mut plant = Plant::new(cfg.clone())?;
    let mut trials = Vec::with_capacity(plan.len());
    for (i, input) in plan.iter().enumerate() {
        let grid = *input.grid();
        let mut noise = rng::stream(seed, i as u64);
        plant.reset();
        let mut phi = Vec::with_capacity(grid.len());
        let mut measured = Vec::with_capacity(grid.len());
        for (n, &u) in input.values().iter().enumerate() {
            let state = *plant.state();
            phi.push(state.phi);
            measured.push(measure(&state, cfg.sensor_noise_std, &mut noise));
            if n < grid.steps() {
                plant.step(u, grid.dt()).map_err(|e| match e {
                    Error::PlantFault { step, state } => Error::Dataset(alloc::format!(
                        "plant fault in trial {i} at step {step} after {i} complete trials: {state}"
                    )),
                    other => other,
                })?;
            }
        }
        trials.push(Trial {
            input: input.clone(),
            phi: SampledSignal::new(grid, phi)?,
            measured: SampledSignal::new(grid, measured)?,
        });
    }
    Dataset::new(trials, &cfg.input_range, &cfg.output_range)
}

/// `dt · Σ_{n < N} |target[n] - predicted[n]|`, the left-Riemann sum of the
/// absolute tracking error.
pub fn trajectory_loss(target: &SampledSignal, predicted: &SampledSignal) -> Result<f64> {
    target.ensure_same_grid(predicted)?;
    let dt = target.grid().dt();
    let steps = target.grid().steps();
    Ok(dt * target.values()[..steps]
        .iter()
        .zip(&predicted.values()[..steps])
        .map(|(a, b)| libm::fabs(a - b))
        .sum::<f64>())
}

/// Loss and its derivative with respect to `predicted`; the subgradient at a
/// zero residual is zero.
fn abs_loss_grad(target: &[f64], predicted: &[f64], dt: f64, d_pred: &mut [f64]) -> f64 {
    let steps = predicted.len() - 1;
    let mut loss = 0.0;
    for n in 0..steps {
        let r = predicted[n] - target[n];
        loss += libm::fabs(r);
        d_pred[n] = if r > 0.0 {
            dt
        } else if r < 0.0 {
            -dt
        } else {
            0.0
        };
    }
    d_pred[steps] = 0.0;
    dt * loss
}

/// Same as [`abs_loss_grad`] against a constant target.
fn abs_loss_grad_const(target: f64, predicted: &[f64], dt: f64, d_pred: &mut [f64]) -> f64 {
    let steps = predicted.len() - 1;
    let mut loss = 0.0;
    for n in 0..steps {
        let r = predicted[n] - target;
        loss += libm::fabs(r);
        d_pred[n] = if r > 0.0 {
            dt
        } else if r < 0.0 {
            -dt
        } else {
            0.0
        };
    }
    d_pred[steps] = 0.0;
    dt * loss
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub model_steps: usize,
    pub controller_steps: usize,
    pub reference_batch: usize,
    pub regularization: f64,
    /// Validation evaluation period during model learning [optimizer steps].
    pub validation_interval: usize,
    /// Stop model learning after this many validation checks without
    /// improvement; `None` runs the full budget and keeps the best checkpoint.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::canonical()
    }
}

impl TrainConfig {
    pub fn canonical() -> Self {
        Self {
            learning_rate: 1e-3,
            clip_norm: 1.0,
            model_steps: 50_000,
            controller_steps: 12_000,
            reference_batch: 50,
            regularization: 4e-4,
            validation_interval: 100,
            patience: None,
            seed: 0,
        }
    }

    /// Reduced budgets for quick runs.
    pub fn ci() -> Self {
        Self { model_steps: 5_000, controller_steps: 1_200, ..Self::canonical() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("learning rate and clip norm must be positive".into()));
        }
        if self.reference_batch == 0 || self.validation_interval == 0 {
            return Err(Error::Config("reference batch and validation interval must be positive".into()));
        }
        if !(self.regularization >= 0.0) {
            return Err(Error::Config("regularization weight must be non-negative".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, ..AdamConfig::default() }
    }
}

/// Loss curves of one training stage.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    /// Objective before each optimizer step.
    pub objective: Vec<f64>,
    /// Tracking part of the objective (equals `objective` for model learning).
    pub tracking: Vec<f64>,
    /// `λ ‖θ‖₂` part of the objective (zero for model learning).
    pub regularizer: Vec<f64>,
    /// `(step, validation loss)` pairs; step `k` means the parameters after `k` updates.
    pub validation: Vec<(usize, f64)>,
    pub best_step: usize,
    pub best_validation_loss: Option<f64>,
    pub steps_run: usize,
    pub wall_clock_seconds: Option<f64>,
}

impl TrainReport {
    pub fn final_validation_loss(&self) -> Option<f64> {
        self.validation.last().map(|(_, l)| *l)
    }
}

/// Surrogate prediction `φ̂` for an input signal, from `ξ(0) = 0`.
pub fn predict(params: &ModelParams, input: &SampledSignal) -> Result<SampledSignal> {
    let mut ws = RolloutWorkspace::default();
    ws.forward(&ModelOde, params.as_slice(), &[0.0; MODEL_LATENT], input.values(), input.grid())?;
    SampledSignal::new(*input.grid(), ws.outputs().to_vec())
}

/// Root-mean-square difference between the measured validation response and
/// the surrogate prediction [rad].
pub fn validation_rmse(params: &ModelParams, dataset: &Dataset) -> Result<f64> {
    let v = dataset.validation();
    let pred = predict(params, &v.input)?;
    let n = pred.len() as f64;
    Ok(libm::sqrt(
        pred.values().iter().zip(v.measured.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n,
    ))
}

fn model_loss_grad(ws: &mut RolloutWorkspace, params: &[f64], trial: &Trial, grad: &mut [f64]) -> Result<f64> {
    let target = trial.measured.values();
    let dt = trial.input.grid().dt();
    ws.grad_into(
        &ModelOde,
        params,
        &[0.0; MODEL_LATENT],
        trial.input.values(),
        trial.input.grid(),
        |y, dy| abs_loss_grad(target, y, dt, dy),
        grad,
    )
}

pub fn train_model(dataset: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainReport)> {
    train_model_with(dataset, cfg, &Sequential)
}

/// Minimize the summed trajectory loss of the five training trials with
/// Adam and gradient clipping; return the parameters with the lowest
/// validation loss seen.
pub fn train_model_with<E: BatchExecutor>(
    dataset: &Dataset,
    cfg: &TrainConfig,
    exec: &E,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    let mut params = nets::init_model_params(rng::stream(cfg.seed, 0).random());
    let mut adam = AdamState::new(ModelParams::LEN, cfg.adam());
    let mut report = TrainReport::default();
    let mut best = BestCheckpoint { params: params.clone(), loss: f64::INFINITY, checks_since: 0 };
    let mut val_ws = RolloutWorkspace::default();
    let mut scratch = vec![0.0; ModelParams::LEN];
    let mut grad = vec![0.0; ModelParams::LEN];

    let mut step = 0;
    while step < cfg.model_steps {
        if step % cfg.validation_interval == 0 {
            let loss = model_loss_grad(&mut val_ws, params.as_slice(), dataset.validation(), &mut scratch)?;
            best.offer(&params, step, loss, &mut report);
            if cfg.patience.is_some_and(|p| best.checks_since > p) {
                break;
            }
        }
        let p = params.as_slice();
        let results = exec.map_with(
            dataset.train(),
            || (RolloutWorkspace::default(), vec![0.0; ModelParams::LEN]),
            |(ws, g), trial| model_loss_grad(ws, p, trial, g).map(|l| (l, g.clone())),
        );
        grad.fill(0.0);
        let mut loss = 0.0;
        for r in results {
            let (l, g) = r?;
            loss += l;
            for (acc, gi) in grad.iter_mut().zip(&g) {
                *acc += gi;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Divergence { step, loss });
        }
        report.objective.push(loss);
        report.tracking.push(loss);
        report.regularizer.push(0.0);
        clip_global_norm(&mut grad, cfg.clip_norm);
        adam.step(params.as_mut_slice(), &grad);
        step += 1;
    }
    if report.validation.last().map(|(s, _)| *s) != Some(step) {
        let loss = model_loss_grad(&mut val_ws, params.as_slice(), dataset.validation(), &mut scratch)?;
        best.offer(&params, step, loss, &mut report);
    }
    report.steps_run = step;
    report.best_validation_loss = Some(best.loss);
    Ok((best.params, report))
}

struct BestCheckpoint {
    params: ModelParams,
    loss: f64,
    checks_since: usize,
}

impl BestCheckpoint {
    fn offer(&mut self, params: &ModelParams, step: usize, loss: f64, report: &mut TrainReport) {
        report.validation.push((step, loss));
        if loss <= self.loss {
            self.loss = loss;
            self.params = params.clone();
            report.best_step = step;
            self.checks_since = 0;
        } else {
            self.checks_since += 1;
        }
    }
}

/// The surrogate and controller in feedback: state `[ξm (9); ξc (5)]`,
/// exogenous input the reference `φd`, trainable parameters `θc`.
#[derive(Debug, Clone, Copy)]
pub struct ClosedLoop<'a> {
    pub model: &'a ModelParams,
    pub range: InputRange,
}

pub const CLOSED_LOOP_DIM: usize = MODEL_LATENT + CONTROLLER_LATENT;

impl ClosedLoop<'_> {
    fn control(&self, params: &[f64], xc: &[f64]) -> f64 {
        flat::scale_output(libm::tanh(flat::controller_pre(params, xc)), &self.range)
    }
}

impl Dynamics for ClosedLoop<'_> {
    fn state_dim(&self) -> usize {
        CLOSED_LOOP_DIM
    }

    fn param_dim(&self) -> usize {
        ControllerParams::LEN
    }

    fn rhs(&self, params: &[f64], x: &[f64], phi_d: f64, dx: &mut [f64]) {
        let (xm, xc) = x.split_at(MODEL_LATENT);
        let (dm, dc) = dx.split_at_mut(MODEL_LATENT);
        let m = self.model.as_slice();
        let u = self.control(params, xc);
        flat::model_rhs(m, xm, u, dm);
        let phi_hat = flat::model_output(m, xm);
        flat::controller_rhs(params, xc, phi_hat, phi_d, dc);
    }

    fn rhs_vjp(
        &self,
        params: &[f64],
        x: &[f64],
        phi_d: f64,
        f: &[f64],
        cot: &[f64],
        x_bar: &mut [f64],
        p_bar: &mut [f64],
    ) {
        let (xm, xc) = x.split_at(MODEL_LATENT);
        let (xm_bar, xc_bar) = x_bar.split_at_mut(MODEL_LATENT);
        let m = self.model.as_slice();
        let u = self.control(params, xc);
        let u_bar = flat::model_rhs_vjp(m, xm, u, &f[..MODEL_LATENT], &cot[..MODEL_LATENT], xm_bar, None);
        flat::controller_output_vjp(params, xc, &self.range, u_bar, xc_bar, p_bar);
        let phi_hat = flat::model_output(m, xm);
        let phi_bar = flat::controller_rhs_vjp(params, xc, phi_hat, phi_d, &cot[MODEL_LATENT..], xc_bar, p_bar);
        flat::model_output_vjp(m, xm, phi_bar, xm_bar, None);
    }

    fn output(&self, _params: &[f64], x: &[f64]) -> f64 {
        flat::model_output(self.model.as_slice(), &x[..MODEL_LATENT])
    }

    fn output_vjp(&self, _params: &[f64], x: &[f64], cot: f64, x_bar: &mut [f64], _p_bar: &mut [f64]) {
        flat::model_output_vjp(self.model.as_slice(), &x[..MODEL_LATENT], cot, &mut x_bar[..MODEL_LATENT], None);
    }
}

/// Predicted output and emitted control of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace {
    pub phi_hat: SampledSignal,
    pub u: SampledSignal,
}

/// Simulate surrogate and controller in feedback from zero latent states.
pub fn closed_loop_rollout(
    model: &ModelParams,
    controller: &ControllerParams,
    reference: &SampledSignal,
    range: &InputRange,
) -> Result<ClosedLoopTrace> {
    let sys = ClosedLoop { model, range: *range };
    let grid = *reference.grid();
    let mut ws = RolloutWorkspace::default();
    ws.forward(&sys, controller.as_slice(), &[0.0; CLOSED_LOOP_DIM], reference.values(), &grid)?;
    let u = (0..grid.len()).map(|n| sys.control(controller.as_slice(), &ws.state(n)[MODEL_LATENT..])).collect();
    Ok(ClosedLoopTrace { phi_hat: SampledSignal::new(grid, ws.outputs().to_vec())?, u: SampledSignal::new(grid, u)? })
}

/// Tracking loss and gradient for one constant reference on the closed loop.
pub fn closed_loop_loss_grad(
    ws: &mut RolloutWorkspace,
    sys: &ClosedLoop<'_>,
    params: &[f64],
    reference: f64,
    grid: &Grid,
    grad: &mut [f64],
) -> Result<f64> {
    let inputs = vec![reference; grid.len()];
    let dt = grid.dt();
    ws.grad_into(sys, params, &[0.0; CLOSED_LOOP_DIM], &inputs, grid, |y, dy| {
        abs_loss_grad_const(reference, y, dt, dy)
    }, grad)
}

/// `λ ‖θ‖₂` and its gradient (zero at the origin), accumulated into `grad`.
pub fn regularizer(params: &[f64], weight: f64, grad: &mut [f64]) -> f64 {
    let norm = l2_norm(params);
    if norm > 0.0 && weight > 0.0 {
        for (g, p) in grad.iter_mut().zip(params) {
            *g += weight * p / norm;
        }
    }
    weight * norm
}

/// Controller objective for a fixed batch of constant references:
/// `λ ‖θ‖₂ + mean_i loss(φd_i)`. Returns `(objective, tracking, regularizer)`
/// and writes the gradient.
pub fn controller_objective<E: BatchExecutor>(
    model: &ModelParams,
    params: &[f64],
    references: &[f64],
    grid: &Grid,
    range: &InputRange,
    weight: f64,
    exec: &E,
    grad: &mut [f64],
) -> Result<(f64, f64, f64)> {
    let sys = ClosedLoop { model, range: *range };
    let results = exec.map_with(
        references,
        || (RolloutWorkspace::default(), vec![0.0; ControllerParams::LEN]),
        |(ws, g), &r| closed_loop_loss_grad(ws, &sys, params, r, grid, g).map(|l| (l, g.clone())),
    );
    grad.fill(0.0);
    let mut tracking = 0.0;
    let scale = 1.0 / references.len() as f64;
    for r in results {
        let (l, g) = r?;
        tracking += l;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    tracking *= scale;
    grad.iter_mut().for_each(|g| *g *= scale);
    let reg = regularizer(params, weight, grad);
    Ok((reg + tracking, tracking, reg))
}

pub fn train_controller(
    model: &ModelParams,
    grid: &Grid,
    input_range: &InputRange,
    output_range: &OutputRange,
    cfg: &TrainConfig,
) -> Result<(ControllerParams, TrainReport)> {
    train_controller_with(model, grid, input_range, output_range, cfg, &Sequential)
}

/// Minimize the regularized expected tracking loss over uniformly drawn
/// constant references, with a fresh batch at every optimizer step.
pub fn train_controller_with<E: BatchExecutor>(
    model: &ModelParams,
    grid: &Grid,
    input_range: &InputRange,
    output_range: &OutputRange,
    cfg: &TrainConfig,
    exec: &E,
) -> Result<(ControllerParams, TrainReport)> {
    cfg.validate()?;
    let mut params = nets::init_controller_params(rng::stream(cfg.seed, 1).random());
    let mut refs_rng = rng::stream(cfg.seed, 2);
    let mut adam = AdamState::new(ControllerParams::LEN, cfg.adam());
    let mut report = TrainReport::default();
    let mut grad = vec![0.0; ControllerParams::LEN];
    let mut references = vec![0.0; cfg.reference_batch];
    for step in 0..cfg.controller_steps {
        for r in references.iter_mut() {
            *r = refs_rng.random_range(output_range.phi_min..output_range.phi_max);
        }
        let (objective, tracking, reg) = controller_objective(
            model,
            params.as_slice(),
            &references,
            grid,
            input_range,
            cfg.regularization,
            exec,
            &mut grad,
        )?;
        if !objective.is_finite() {
            return Err(Error::Divergence { step, loss: objective });
        }
        report.objective.push(objective);
        report.tracking.push(tracking);
        report.regularizer.push(reg);
        clip_global_norm(&mut grad, cfg.clip_norm);
        adam.step(params.as_mut_slice(), &grad);
    }
    report.steps_run = cfg.controller_steps;
    report.best_step = cfg.controller_steps;
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::reset_to_saturation;
    use crate::siggen::probing_plan;

    fn grid(t: f64) -> Grid {
        Grid::with_duration(t).unwrap()
    }

    #[test]
    fn loss_examples() {
        let g = grid(5.0);
        let zero = SampledSignal::constant(g, 0.0);
        assert_eq!(trajectory_loss(&zero, &zero).unwrap(), 0.0);
        let gap = SampledSignal::constant(g, 0.1);
        assert!((trajectory_loss(&zero, &gap).unwrap() - 0.5).abs() < 1e-12);
        let split = SampledSignal::from_fn(g, |t| if t < 2.5 - 1e-9 { 0.1 } else { -0.1 });
        assert!((trajectory_loss(&zero, &split).unwrap() - 0.5).abs() < 1e-12);
        let other = SampledSignal::constant(grid(1.0), 0.0);
        assert!(trajectory_loss(&zero, &other).is_err());
    }

    #[test]
    fn loss_gradient_is_signed_step() {
        let mut d = [9.0; 4];
        let l = abs_loss_grad(&[0.0, 0.0, 0.0, 0.0], &[0.2, -0.1, 0.0, 5.0], 0.01, &mut d);
        assert!((l - 0.003).abs() < 1e-15);
        assert_eq!(d, [0.01, -0.01, 0.0, 0.0]);
    }

    #[test]
    fn dataset_protocol_setup1() {
        let cfg = PlantConfig::setup1();
        let g = grid(cfg.trial_duration);
        let plan = probing_plan(&g, &cfg.input_range, 3).unwrap();
        let ds = collect_dataset(&cfg, &plan, 3).unwrap();
        assert_eq!(ds.trials().len(), 6);
        assert_eq!(ds.train().len(), 5);
        assert!(ds.trials().iter().all(|t| t.measured.len() == 501));
        assert!((ds.interaction_time() - 30.0).abs() < 1e-12);
        let start = reset_to_saturation(&cfg).phi;
        for t in ds.trials() {
            assert_eq!(t.phi.values()[0], start);
            assert!(t.phi.values().iter().all(|p| p.abs() <= 1.0));
        }
        assert_eq!(ds, collect_dataset(&cfg, &plan, 3).unwrap());
    }

    #[test]
    fn dataset_rejects_wrong_trial_count() {
        let cfg = PlantConfig::setup1();
        let g = grid(cfg.trial_duration);
        let plan = probing_plan(&g, &cfg.input_range, 3).unwrap();
        assert!(collect_dataset(&cfg, &plan[..5], 3).is_err());
    }

    #[test]
    fn zero_controller_emits_midpoint() {
        let model = nets::init_model_params(4);
        let r = SampledSignal::constant(grid(1.0), 0.3);
        let trace = closed_loop_rollout(&model, &ControllerParams::zeros(), &r, &InputRange::default()).unwrap();
        assert!(trace.u.values().iter().all(|u| *u == 0.0));
    }

    #[test]
    fn regularizer_scaling() {
        let p = [3.0, 4.0];
        let mut g = [0.0; 2];
        assert_eq!(regularizer(&p, 0.0, &mut g), 0.0);
        assert_eq!(g, [0.0; 2]);
        assert!((regularizer(&p, 0.5, &mut g) - 2.5).abs() < 1e-15);
        assert!((g[0] - 0.3).abs() < 1e-15 && (g[1] - 0.4).abs() < 1e-15);
        let mut g = [0.0; 2];
        assert_eq!(regularizer(&[0.0, 0.0], 1.0, &mut g), 0.0);
        assert_eq!(g, [0.0; 2]);
    }

    #[test]
    fn single_reference_batch_equals_trajectory_loss() {
        let model = nets::init_model_params(2);
        let ctrl = nets::init_controller_params(5);
        let g = grid(1.0);
        let mut grad = vec![0.0; ControllerParams::LEN];
        let (obj, tracking, reg) = controller_objective(
            &model,
            ctrl.as_slice(),
            &[0.4],
            &g,
            &InputRange::default(),
            0.0,
            &Sequential,
            &mut grad,
        )
        .unwrap();
        let r = SampledSignal::constant(g, 0.4);
        let trace = closed_loop_rollout(&model, &ctrl, &r, &InputRange::default()).unwrap();
        assert_eq!(tracking, trajectory_loss(&r, &trace.phi_hat).unwrap());
        assert_eq!(reg, 0.0);
        assert_eq!(obj, tracking);
    }
}

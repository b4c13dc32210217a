//! Staged pipeline: collect, train-model, train-controller, evaluate.
//!
//! Each stage writes into `<out>/<stage>/` exactly once. The directory is
//! built under a temporary name and renamed into place together with a
//! manifest recording the config hash, the stage seed and a digest of every
//! file. A stage whose manifest matches the current config is skipped, which
//! makes the pipeline resumable; one that does not match is refused.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anodec_core::eval::{
    evaluate_suite_with, run_trial, ControllerSpec, Distribution, SuiteReport, SuiteTrial,
};
use anodec_core::learn::{
    collect_dataset, train_controller_with, train_model_with, Dataset, TrainConfig, TrainReport, DATASET_TRIALS,
};
use anodec_core::nets::{ControllerParams, ModelParams};
use anodec_core::siggen::probing_plan;
use anodec_core::Grid;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};
use crate::exec::Rayon;
use crate::formats::{read_json, read_trial, write_json, write_rows, write_trial, Checkpoint, FORMAT_VERSION};
use crate::report::{export_report, import_report, summarize};
use crate::seeds::{self, sha256_hex};

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST: &str = "manifest.json";
pub const TIMING: &str = "timing.json";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const TRAIN_REPORT: &str = "report.json";
pub const LOSS_CURVE: &str = "loss.csv";
pub const VALIDATION_CURVE: &str = "validation.csv";
pub const DISTURBED_DIR: &str = "disturbed";

pub const ANODEC_ID: &str = "anodec";
pub const PID_ID: &str = "pid";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Collect,
    TrainModel,
    TrainController,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Collect, Stage::TrainModel, Stage::TrainController, Stage::Evaluate];

    pub fn label(&self) -> &'static str {
        match self {
            Stage::Collect => seeds::COLLECT,
            Stage::TrainModel => seeds::TRAIN_MODEL,
            Stage::TrainController => seeds::TRAIN_CONTROLLER,
            Stage::Evaluate => seeds::EVALUATE,
        }
    }

    pub fn dir_name(&self) -> &'static str {
        match self {
            Stage::Collect => "dataset",
            Stage::TrainModel => "model",
            Stage::TrainController => "controller",
            Stage::Evaluate => "evaluation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    /// Relative path to SHA-256 digest.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Skipped,
}

/// An output directory bound to one resolved configuration.
#[derive(Debug, Clone)]
pub struct Run {
    pub root: PathBuf,
    pub config: RunConfig,
}

impl Run {
    /// Bind `root` to `config`. A fresh directory records the config; an
    /// existing one must have been created with the same config.
    pub fn open(root: impl Into<PathBuf>, config: RunConfig) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(PipelineError::io(&root))?;
        let path = root.join(CONFIG_FILE);
        let text = config.to_toml();
        match std::fs::read_to_string(&path) {
            Ok(existing) if existing == text => {}
            Ok(_) => {
                return Err(PipelineError::Config(format!(
                    "{} was created with a different configuration",
                    root.display()
                )))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                std::fs::write(&path, text).map_err(PipelineError::io(&path))?;
            }
            Err(e) => return Err(PipelineError::Io { path, source: e }),
        }
        Ok(Self { root, config })
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.dir_name())
    }

    pub fn stage_seed(&self, stage: Stage) -> u64 {
        seeds::derive_seed(self.config.seed, stage.label())
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::with_duration(self.config.plant.trial_duration)?)
    }

    fn train_config(&self, stage: Stage) -> TrainConfig {
        TrainConfig { seed: self.stage_seed(stage), ..self.config.train.clone() }
    }

    /// Whether `stage` has a complete output matching this configuration.
    pub fn is_complete(&self, stage: Stage) -> Result<bool> {
        let dir = self.stage_dir(stage);
        if !dir.exists() {
            return Ok(false);
        }
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Err(PipelineError::Config(format!("{} exists but has no manifest", dir.display())));
        }
        let m: Manifest = read_json(&path)?;
        if m.config_hash != self.config.hash() || m.seed != self.stage_seed(stage) || m.stage != stage.label() {
            return Err(PipelineError::Config(format!("{} belongs to a different run", dir.display())));
        }
        for (name, digest) in &m.files {
            let p = dir.join(name);
            let bytes = std::fs::read(&p).map_err(PipelineError::io(&p))?;
            if &sha256_hex(&bytes) != digest {
                return Err(PipelineError::format(p, "contents differ from the stage manifest"));
            }
        }
        Ok(true)
    }

    fn require(&self, stage: Stage) -> Result<()> {
        if self.is_complete(stage)? {
            Ok(())
        } else {
            Err(PipelineError::Stage {
                stage: stage.label(),
                message: format!("missing; run `anodec {}` first", stage.label()),
            })
        }
    }

    /// Build a stage directory under a temporary name, then move it into place.
    /// `started` marks the beginning of the stage's work, for `timing.json`.
    fn write_stage<T>(&self, stage: Stage, started: Instant, body: impl FnOnce(&Path) -> Result<T>) -> Result<T> {
        let tmp = self.root.join(format!(".{}.partial", stage.dir_name()));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(PipelineError::io(&tmp))?;
        }
        std::fs::create_dir_all(&tmp).map_err(PipelineError::io(&tmp))?;
        let value = body(&tmp)?;
        let mut files = BTreeMap::new();
        digest_tree(&tmp, &tmp, &mut files)?;
        files.remove(TIMING);
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            stage: stage.label().into(),
            config_hash: self.config.hash(),
            seed: self.stage_seed(stage),
            files,
        };
        write_json(&tmp.join(MANIFEST), &manifest)?;
        write_json(&tmp.join(TIMING), &serde_json::json!({ "wall_clock_seconds": started.elapsed().as_secs_f64() }))?;
        let dir = self.stage_dir(stage);
        std::fs::rename(&tmp, &dir).map_err(PipelineError::io(&dir))?;
        Ok(value)
    }

    pub fn collect(&self) -> Result<Outcome> {
        if self.is_complete(Stage::Collect)? {
            return Ok(Outcome::Skipped);
        }
        let started = Instant::now();
        let seed = self.stage_seed(Stage::Collect);
        let plan = probing_plan(&self.grid()?, &self.config.plant.input_range, seed)?;
        let dataset = collect_dataset(&self.config.plant, &plan, seed)
            .map_err(|e| PipelineError::Stage { stage: seeds::COLLECT, message: e.to_string() })?;
        self.write_stage(Stage::Collect, started, |dir| {
            for (i, trial) in dataset.trials().iter().enumerate() {
                write_trial(&dir.join(trial_file(i)), trial)?;
            }
            Ok(())
        })?;
        Ok(Outcome::Ran)
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        self.require(Stage::Collect)?;
        let dir = self.stage_dir(Stage::Collect);
        let trials = (0..DATASET_TRIALS).map(|i| read_trial(&dir.join(trial_file(i)))).collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(trials, &self.config.plant.input_range, &self.config.plant.output_range)?)
    }

    pub fn train_model(&self) -> Result<Outcome> {
        if self.is_complete(Stage::TrainModel)? {
            return Ok(Outcome::Skipped);
        }
        let started = Instant::now();
        let dataset = self.load_dataset()?;
        let (params, report) = train_model_with(&dataset, &self.train_config(Stage::TrainModel), &Rayon)
            .map_err(|e| PipelineError::Stage { stage: seeds::TRAIN_MODEL, message: e.to_string() })?;
        self.write_stage(Stage::TrainModel, started, |dir| write_training(dir, &Checkpoint::model(&params), &report))?;
        Ok(Outcome::Ran)
    }

    pub fn load_model(&self) -> Result<ModelParams> {
        self.require(Stage::TrainModel)?;
        Checkpoint::read_model(&self.stage_dir(Stage::TrainModel).join(CHECKPOINT))
    }

    pub fn load_report(&self, stage: Stage) -> Result<TrainReport> {
        self.require(stage)?;
        read_json(&self.stage_dir(stage).join(TRAIN_REPORT))
    }

    pub fn train_controller(&self) -> Result<Outcome> {
        if self.is_complete(Stage::TrainController)? {
            return Ok(Outcome::Skipped);
        }
        let started = Instant::now();
        let model = self.load_model()?;
        let plant = &self.config.plant;
        let (params, report) = train_controller_with(
            &model,
            &self.grid()?,
            &plant.input_range,
            &plant.output_range,
            &self.train_config(Stage::TrainController),
            &Rayon,
        )
        .map_err(|e| PipelineError::Stage { stage: seeds::TRAIN_CONTROLLER, message: e.to_string() })?;
        self.write_stage(Stage::TrainController, started, |dir| write_training(dir, &Checkpoint::controller(&params), &report))?;
        Ok(Outcome::Ran)
    }

    pub fn load_controller(&self) -> Result<ControllerParams> {
        self.require(Stage::TrainController)?;
        Checkpoint::read_controller(&self.stage_dir(Stage::TrainController).join(CHECKPOINT))
    }

    pub fn controllers(&self) -> Result<[ControllerSpec; 2]> {
        Ok([
            ControllerSpec::anodec(ANODEC_ID, self.load_controller()?, self.config.plant.input_range),
            ControllerSpec::pid(PID_ID, self.config.pid),
        ])
    }

    /// Paired reference suite for ANODEC and PID, plus disturbed trials when
    /// `disturbances` is set. A partial suite is still written and then
    /// reported as an error.
    pub fn evaluate(&self, disturbances: bool) -> Result<Outcome> {
        let dir = self.stage_dir(Stage::Evaluate);
        if self.is_complete(Stage::Evaluate)? {
            if disturbances && !dir.join(DISTURBED_DIR).exists() {
                return Err(PipelineError::Config(format!(
                    "{} was evaluated without disturbed trials; use a new output directory",
                    dir.display()
                )));
            }
            return Ok(Outcome::Skipped);
        }
        let started = Instant::now();
        let controllers = self.controllers()?;
        let seed = self.stage_seed(Stage::Evaluate);
        let report = evaluate_suite_with(&self.config.plant, &controllers, &self.config.suite, seed, &Rayon)?;
        let disturbed = if disturbances { Some(self.disturbed_trials(&controllers)?) } else { None };
        let failures = report.failures.len() + disturbed.as_ref().map_or(0, |d| d.failures.len());
        self.write_stage(Stage::Evaluate, started, |dir| {
            export_report(&report, dir)?;
            if let Some(d) = &disturbed {
                export_report(d, &dir.join(DISTURBED_DIR))?;
            }
            Ok(())
        })?;
        if failures > 0 {
            return Err(PipelineError::PartialSuite(failures));
        }
        Ok(Outcome::Ran)
    }

    /// One impulse trial and one clamp trial per controller on a shared
    /// cubic-spline reference.
    pub fn disturbed_trials(&self, controllers: &[ControllerSpec]) -> Result<SuiteReport> {
        let d = &self.config.disturbances;
        let seed = seeds::derive_seed(self.config.seed, seeds::DISTURBANCES);
        let grid = Grid::with_duration(d.trial_duration)?;
        let reference = Distribution::CubicSpline.draw(&grid, &self.config.plant.output_range, seed);
        let mut report = SuiteReport::default();
        for spec in controllers {
            for (index, schedule) in [d.impulse_schedule(), d.clamp_schedule()].into_iter().enumerate() {
                let mut ctrl = spec.build(grid.dt());
                match run_trial(&self.config.plant, &spec.id, ctrl.as_mut(), &reference, &schedule, seed) {
                    Ok(record) => report.trials.push(SuiteTrial {
                        distribution: Distribution::CubicSpline,
                        index,
                        reference_seed: seed,
                        record,
                    }),
                    Err(e) => report.failures.push(anodec_core::eval::SuiteFailure {
                        distribution: Distribution::CubicSpline,
                        index,
                        controller: spec.id.clone(),
                        cause: e.to_string(),
                    }),
                }
            }
        }
        report.summary = summarize(&report.trials, controllers);
        Ok(report)
    }

    pub fn load_evaluation(&self) -> Result<SuiteReport> {
        self.require(Stage::Evaluate)?;
        import_report(&self.stage_dir(Stage::Evaluate))
    }

    pub fn load_disturbed(&self) -> Result<Option<SuiteReport>> {
        self.require(Stage::Evaluate)?;
        let dir = self.stage_dir(Stage::Evaluate).join(DISTURBED_DIR);
        if dir.exists() { import_report(&dir).map(Some) } else { Ok(None) }
    }

    /// All stages in order, skipping completed ones.
    pub fn pipeline(&self, disturbances: bool) -> Result<Vec<(Stage, Outcome)>> {
        Ok(vec![
            (Stage::Collect, self.collect()?),
            (Stage::TrainModel, self.train_model()?),
            (Stage::TrainController, self.train_controller()?),
            (Stage::Evaluate, self.evaluate(disturbances)?),
        ])
    }
}

#[derive(Serialize)]
struct LossRow {
    step: usize,
    objective: f64,
    tracking: f64,
    regularizer: f64,
}

#[derive(Serialize)]
struct ValidationRow {
    step: usize,
    loss: f64,
}

pub fn trial_file(i: usize) -> String {
    format!("trial_{i}.csv")
}

fn write_training(dir: &Path, checkpoint: &Checkpoint, report: &TrainReport) -> Result<()> {
    checkpoint.write(&dir.join(CHECKPOINT))?;
    let report = TrainReport { wall_clock_seconds: None, ..report.clone() };
    write_json(&dir.join(TRAIN_REPORT), &report)?;
    let losses = (0..report.objective.len()).map(|k| LossRow {
        step: k,
        objective: report.objective[k],
        tracking: report.tracking[k],
        regularizer: report.regularizer[k],
    });
    write_rows(&dir.join(LOSS_CURVE), losses)?;
    if !report.validation.is_empty() {
        write_rows(&dir.join(VALIDATION_CURVE), report.validation.iter().map(|&(step, loss)| ValidationRow { step, loss }))?;
    }
    Ok(())
}

fn digest_tree(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(PipelineError::io(dir))?;
    for entry in entries {
        let path = entry.map_err(PipelineError::io(dir))?.path();
        if path.is_dir() {
            digest_tree(base, &path, out)?;
        } else {
            let bytes = std::fs::read(&path).map_err(PipelineError::io(&path))?;
            let rel = path.strip_prefix(base).expect("inside base").to_string_lossy().replace('\\', "/");
            out.insert(rel, sha256_hex(&bytes));
        }
    }
    Ok(())
}

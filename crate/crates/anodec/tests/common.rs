#![allow(dead_code)]

use anodec::config::{RunConfig, Setup};

/// A configuration small enough to run every stage in a few seconds.
pub fn tiny(setup: Setup) -> RunConfig {
    let mut cfg = RunConfig::preset(setup, true);
    cfg.plant.trial_duration = 1.0;
    cfg.train.model_steps = 30;
    cfg.train.controller_steps = 4;
    cfg.train.reference_batch = 3;
    cfg.train.validation_interval = 10;
    cfg.suite.steps = 1;
    cfg.suite.double_steps = 1;
    cfg.suite.splines = 2;
    cfg.disturbances.trial_duration = 3.0;
    cfg
}

//! On-disk formats: trial CSVs and JSON parameter checkpoints.
//!
//! Floats are written in shortest round-trip form, so every value reads back
//! bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anodec_core::learn::Trial;
use anodec_core::nets::{
    ControllerParams, ModelParams, CONTROLLER_INPUTS, CONTROLLER_LATENT, MODEL_INPUTS, MODEL_LATENT,
};
use anodec_core::signal::DEFAULT_DT;
use anodec_core::{Grid, SampledSignal};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub t: f64,
    pub u: f64,
    pub phi: f64,
    pub phi_meas: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub t: f64,
    pub phi_d: f64,
    pub phi: f64,
    pub phi_meas: f64,
    pub u: f64,
}

pub fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let file = File::create(path).map_err(PipelineError::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| PipelineError::format(path, e))?;
    }
    w.flush().map_err(PipelineError::io(path))
}

pub fn read_rows<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize().collect::<Result<Vec<R>, _>>().map_err(|e| PipelineError::format(path, e))
}

/// Rebuild the sample grid from a time column written by this module.
pub fn grid_from_times(path: &Path, times: &[f64]) -> Result<Grid> {
    let (Some(&t0), Some(&t_end)) = (times.first(), times.last()) else {
        return Err(PipelineError::format(path, "no rows"));
    };
    let grid = Grid::new(t0, (times.len() - 1) as f64 * DEFAULT_DT, DEFAULT_DT)
        .map_err(|e| PipelineError::format(path, e))?;
    let aligned = times.iter().enumerate().all(|(n, t)| (grid.time(n) - t).abs() < 1e-9);
    if !aligned || (grid.time(grid.steps()) - t_end).abs() > 1e-9 {
        return Err(PipelineError::format(path, "time column is not on the 0.01 s grid"));
    }
    Ok(grid)
}

fn signal(path: &Path, grid: Grid, values: Vec<f64>) -> Result<SampledSignal> {
    SampledSignal::new(grid, values).map_err(|e| PipelineError::format(path, e))
}

pub fn write_trial(path: &Path, trial: &Trial) -> Result<()> {
    let grid = trial.input.grid();
    let rows = (0..grid.len()).map(|n| DatasetRow {
        t: grid.time(n),
        u: trial.input.values()[n],
        phi: trial.phi.values()[n],
        phi_meas: trial.measured.values()[n],
    });
    write_rows(path, rows)
}

pub fn read_trial(path: &Path) -> Result<Trial> {
    let rows: Vec<DatasetRow> = read_rows(path)?;
    let grid = grid_from_times(path, &rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
    Ok(Trial {
        input: signal(path, grid, rows.iter().map(|r| r.u).collect())?,
        phi: signal(path, grid, rows.iter().map(|r| r.phi).collect())?,
        measured: signal(path, grid, rows.iter().map(|r| r.phi_meas).collect())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Model,
    Controller,
}

impl NetKind {
    fn dims(&self) -> (usize, usize, usize) {
        match self {
            NetKind::Model => (MODEL_LATENT, MODEL_INPUTS, ModelParams::LEN),
            NetKind::Controller => (CONTROLLER_LATENT, CONTROLLER_INPUTS, ControllerParams::LEN),
        }
    }
}

/// Flat parameter vector with a header describing the network it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub net: NetKind,
    pub latent: usize,
    pub inputs: usize,
    pub param_count: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: NetKind, params: &[f64]) -> Self {
        let (latent, inputs, param_count) = net.dims();
        Self { format_version: FORMAT_VERSION, net, latent, inputs, param_count, params: params.to_vec() }
    }

    pub fn model(p: &ModelParams) -> Self {
        Self::new(NetKind::Model, p.as_slice())
    }

    pub fn controller(p: &ControllerParams) -> Self {
        Self::new(NetKind::Controller, p.as_slice())
    }

    fn check(&self, path: &Path, net: NetKind) -> Result<()> {
        let (latent, inputs, count) = net.dims();
        if self.format_version != FORMAT_VERSION {
            return Err(PipelineError::format(path, format!("unsupported format version {}", self.format_version)));
        }
        if self.net != net || self.latent != latent || self.inputs != inputs || self.param_count != count {
            return Err(PipelineError::format(path, format!("expected a {net:?} checkpoint with {count} parameters")));
        }
        if self.params.len() != count || self.params.iter().any(|p| !p.is_finite()) {
            return Err(PipelineError::format(path, "parameter vector has wrong length or non-finite entries"));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn read_model(path: &Path) -> Result<ModelParams> {
        let c: Checkpoint = read_json(path)?;
        c.check(path, NetKind::Model)?;
        ModelParams::from_slice(&c.params).map_err(|e| PipelineError::format(path, e))
    }

    pub fn read_controller(path: &Path) -> Result<ControllerParams> {
        let c: Checkpoint = read_json(path)?;
        c.check(path, NetKind::Controller)?;
        ControllerParams::from_slice(&c.params).map_err(|e| PipelineError::format(path, e))
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(PipelineError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| PipelineError::format(path, e))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(PipelineError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(PipelineError::io(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| PipelineError::format(path, e))
}

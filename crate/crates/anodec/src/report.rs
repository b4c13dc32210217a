//! Suite report export and re-import: a summary table (CSV and JSON) plus
//! one CSV log per trial.

use std::path::Path;

use anodec_core::eval::{
    mean_std, ControllerSpec, DisturbanceSchedule, Distribution, SuiteFailure, SuiteReport, SuiteTrial, SummaryRow,
    TrialRecord,
};
use anodec_core::SampledSignal;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::formats::{grid_from_times, read_json, read_rows, write_json, write_rows, EvalRow, FORMAT_VERSION};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const TRIALS_DIR: &str = "trials";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialEntry {
    pub controller: String,
    pub distribution: Distribution,
    pub index: usize,
    pub reference_seed: u64,
    pub rmse_deg: f64,
    pub disturbances: DisturbanceSchedule,
    pub log: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureEntry {
    pub controller: String,
    pub distribution: Distribution,
    pub index: usize,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryFile {
    pub format_version: u32,
    pub partial: bool,
    pub summary: Vec<SummaryRow>,
    pub trials: Vec<TrialEntry>,
    pub failures: Vec<FailureEntry>,
}

#[derive(Serialize, Deserialize)]
struct SummaryCsvRow {
    distribution: Distribution,
    controller: String,
    n: usize,
    mean_rmse_deg: f64,
    std_rmse_deg: f64,
}

/// Log file name: controller id, distribution, index and reference seed.
pub fn log_name(t: &SuiteTrial) -> String {
    let tag = if t.record.disturbances.events.is_empty() { String::new() } else { "_disturbed".into() };
    format!(
        "{}_{}_{:02}_seed{}{tag}.csv",
        t.record.controller,
        t.distribution.label(),
        t.index,
        t.reference_seed
    )
}

pub fn export_report(report: &SuiteReport, dir: &Path) -> Result<()> {
    let trials_dir = dir.join(TRIALS_DIR);
    std::fs::create_dir_all(&trials_dir).map_err(PipelineError::io(&trials_dir))?;
    let mut entries = Vec::with_capacity(report.trials.len());
    for t in &report.trials {
        let name = log_name(t);
        let r = &t.record;
        let grid = r.reference.grid();
        let rows = (0..grid.len()).map(|n| EvalRow {
            t: grid.time(n),
            phi_d: r.reference.values()[n],
            phi: r.phi.values()[n],
            phi_meas: r.measured.values()[n],
            u: r.u.values()[n],
        });
        write_rows(&trials_dir.join(&name), rows)?;
        entries.push(TrialEntry {
            controller: r.controller.clone(),
            distribution: t.distribution,
            index: t.index,
            reference_seed: t.reference_seed,
            rmse_deg: r.rmse_deg,
            disturbances: r.disturbances.clone(),
            log: format!("{TRIALS_DIR}/{name}"),
        });
    }
    let csv_rows = report.summary.iter().map(|s| SummaryCsvRow {
        distribution: s.distribution,
        controller: s.controller.clone(),
        n: s.n,
        mean_rmse_deg: s.mean_rmse_deg,
        std_rmse_deg: s.std_rmse_deg,
    });
    write_rows(&dir.join(SUMMARY_CSV), csv_rows)?;
    let file = SummaryFile {
        format_version: FORMAT_VERSION,
        partial: report.is_partial(),
        summary: report.summary.clone(),
        trials: entries,
        failures: report
            .failures
            .iter()
            .map(|f| FailureEntry {
                controller: f.controller.clone(),
                distribution: f.distribution,
                index: f.index,
                cause: f.cause.clone(),
            })
            .collect(),
    };
    write_json(&dir.join(SUMMARY_JSON), &file)
}

pub fn import_report(dir: &Path) -> Result<SuiteReport> {
    let path = dir.join(SUMMARY_JSON);
    let file: SummaryFile = read_json(&path)?;
    if file.format_version != FORMAT_VERSION {
        return Err(PipelineError::format(&path, format!("unsupported format version {}", file.format_version)));
    }
    let mut trials = Vec::with_capacity(file.trials.len());
    for e in file.trials {
        let log = dir.join(&e.log);
        let rows: Vec<EvalRow> = read_rows(&log)?;
        let grid = grid_from_times(&log, &rows.iter().map(|r| r.t).collect::<Vec<_>>())?;
        let sig = |f: fn(&EvalRow) -> f64| {
            SampledSignal::new(grid, rows.iter().map(f).collect()).map_err(|err| PipelineError::format(&log, err))
        };
        trials.push(SuiteTrial {
            distribution: e.distribution,
            index: e.index,
            reference_seed: e.reference_seed,
            record: TrialRecord {
                controller: e.controller,
                reference: sig(|r| r.phi_d)?,
                phi: sig(|r| r.phi)?,
                measured: sig(|r| r.phi_meas)?,
                u: sig(|r| r.u)?,
                disturbances: e.disturbances,
                rmse_deg: e.rmse_deg,
            },
        });
    }
    let failures = file
        .failures
        .into_iter()
        .map(|f| SuiteFailure { distribution: f.distribution, index: f.index, controller: f.controller, cause: f.cause })
        .collect();
    Ok(SuiteReport { summary: file.summary, trials, failures })
}

/// Per-distribution statistics for trials that were assembled outside
/// `evaluate_suite`.
pub fn summarize(trials: &[SuiteTrial], controllers: &[ControllerSpec]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for c in controllers {
        for d in Distribution::ALL {
            let v: Vec<f64> = trials
                .iter()
                .filter(|t| t.distribution == d && t.record.controller == c.id)
                .map(|t| t.record.rmse_deg)
                .collect();
            if v.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&v);
            rows.push(SummaryRow {
                distribution: d,
                controller: c.id.clone(),
                n: v.len(),
                mean_rmse_deg: mean,
                std_rmse_deg: std,
            });
        }
    }
    rows
}

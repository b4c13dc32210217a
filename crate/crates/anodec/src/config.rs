//! Run configuration: a TOML file whose tables overlay the built-in presets.
//!
//! ```toml
//! setup = 1              # 1 or 2
//! seed = 0               # master seed
//! ci_profile = false     # reduced training budgets
//! out = "runs/setup1"    # output directory
//! plant_config = "plant.toml"   # optional, relative to this file
//!
//! [plant]          # PlantConfig keys, applied after plant_config
//! [train]          # TrainConfig keys (seed is derived, not read)
//! [pid]            # PidConfig keys
//! [suite]          # steps / double_steps / splines
//! [disturbances]   # DisturbanceConfig keys
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use anodec_core::baseline::PidConfig;
use anodec_core::eval::{DisturbanceConfig, SuiteCounts};
use anodec_core::learn::TrainConfig;
use anodec_core::plant::PlantConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};
use crate::seeds::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Setup {
    Unloaded,
    Loaded,
}

impl Setup {
    pub fn plant(&self) -> PlantConfig {
        match self {
            Setup::Unloaded => PlantConfig::setup1(),
            Setup::Loaded => PlantConfig::setup2(),
        }
    }

    pub fn suite(&self) -> SuiteCounts {
        match self {
            Setup::Unloaded => SuiteCounts::setup1(),
            Setup::Loaded => SuiteCounts::setup2(),
        }
    }
}

impl TryFrom<u8> for Setup {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(Setup::Unloaded),
            2 => Ok(Setup::Loaded),
            other => Err(format!("setup must be 1 or 2, got {other}")),
        }
    }
}

impl From<Setup> for u8 {
    fn from(s: Setup) -> u8 {
        match s {
            Setup::Unloaded => 1,
            Setup::Loaded => 2,
        }
    }
}

/// The file as written, before presets are applied.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub setup: Option<Setup>,
    pub seed: Option<u64>,
    pub ci_profile: Option<bool>,
    pub out: Option<PathBuf>,
    pub plant_config: Option<PathBuf>,
    pub plant: Option<toml::Table>,
    pub train: Option<toml::Table>,
    pub pid: Option<toml::Table>,
    pub suite: Option<toml::Table>,
    pub disturbances: Option<toml::Table>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub setup: Option<Setup>,
    pub seed: Option<u64>,
    pub ci_profile: bool,
    pub out: Option<PathBuf>,
}

/// Fully resolved configuration. Everything a run produces is a function of
/// this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub setup: Setup,
    pub seed: u64,
    pub ci_profile: bool,
    pub plant: PlantConfig,
    pub train: TrainConfig,
    pub pid: PidConfig,
    pub suite: SuiteCounts,
    pub disturbances: DisturbanceConfig,
}

impl RunConfig {
    pub fn preset(setup: Setup, ci_profile: bool) -> Self {
        let plant = setup.plant();
        Self {
            setup,
            seed: 0,
            ci_profile,
            pid: PidConfig { output: plant.input_range, ..PidConfig::default() },
            plant,
            train: if ci_profile { TrainConfig::ci() } else { TrainConfig::canonical() },
            suite: setup.suite(),
            disturbances: DisturbanceConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.train.validate()?;
        self.disturbances.validate()?;
        if !(self.pid.dt > 0.0) {
            return Err(PipelineError::Config("pid.dt must be positive".into()));
        }
        if self.suite.total() == 0 {
            return Err(PipelineError::Config("suite has no references".into()));
        }
        Ok(())
    }

    /// Hash of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, table: Option<&toml::Table>, what: &str) -> Result<T> {
    let mut merged = toml::Table::try_from(base).expect("serializable preset");
    if let Some(table) = table {
        merge(&mut merged, table);
    }
    merged.try_into().map_err(|e: toml::de::Error| PipelineError::Config(format!("[{what}] {e}")))
}

fn merge(dst: &mut toml::Table, src: &toml::Table) {
    for (k, v) in src {
        match (dst.get_mut(k), v) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s),
            _ => {
                dst.insert(k.clone(), v.clone());
            }
        }
    }
}

/// Resolve a config file (or the defaults when `path` is `None`) plus
/// command-line overrides. Returns the config and the output directory.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<(RunConfig, Option<PathBuf>)> {
    let (file, base_dir) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            let file: ConfigFile =
                toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (ConfigFile::default(), PathBuf::new()),
    };
    resolve(file, &base_dir, overrides)
}

pub fn resolve(file: ConfigFile, base_dir: &Path, overrides: &Overrides) -> Result<(RunConfig, Option<PathBuf>)> {
    let setup = overrides.setup.or(file.setup).unwrap_or(Setup::Unloaded);
    let ci = overrides.ci_profile || file.ci_profile.unwrap_or(false);
    let preset = RunConfig::preset(setup, ci);

    let mut plant = preset.plant.clone();
    if let Some(rel) = &file.plant_config {
        let p = base_dir.join(rel);
        let text = std::fs::read_to_string(&p)
            .map_err(|e| PipelineError::Config(format!("plant_config {}: {e}", p.display())))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
        plant = overlay(&plant, Some(&table), "plant_config")?;
    }
    let plant = overlay(&plant, file.plant.as_ref(), "plant")?;
    if file.train.as_ref().is_some_and(|t| t.contains_key("seed")) {
        return Err(PipelineError::Config("[train] seed is derived from the master seed".into()));
    }
    let train = overlay(&preset.train, file.train.as_ref(), "train")?;
    let pid_base = PidConfig { output: plant.input_range, ..preset.pid };
    let pid = overlay(&pid_base, file.pid.as_ref(), "pid")?;
    let suite = overlay(&preset.suite, file.suite.as_ref(), "suite")?;
    let disturbances = overlay(&preset.disturbances, file.disturbances.as_ref(), "disturbances")?;

    let cfg = RunConfig {
        setup,
        seed: overrides.seed.or(file.seed).unwrap_or(0),
        ci_profile: ci,
        plant,
        train,
        pid,
        suite,
        disturbances,
    };
    cfg.validate()?;
    let out = overrides.out.clone().or_else(|| file.out.map(|o| base_dir.join(o)));
    Ok((cfg, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        resolve(file, Path::new("."), &Overrides::default()).map(|(c, _)| c)
    }

    #[test]
    fn empty_file_is_setup1_canonical() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, RunConfig::preset(Setup::Unloaded, false));
        assert_eq!(cfg.train.model_steps, 50_000);
    }

    #[test]
    fn setup2_preset() {
        let cfg = parse("setup = 2\nci_profile = true").unwrap();
        assert!(cfg.plant.gravity);
        assert_eq!(cfg.plant.trial_duration, 8.0);
        assert_eq!(cfg.suite, SuiteCounts::setup2());
        assert_eq!(cfg.train.model_steps, 5_000);
    }

    #[test]
    fn overlays_keep_unmentioned_keys() {
        let cfg = parse("[plant]\ndamping = 0.7\n[pid]\nanti_windup = false").unwrap();
        assert_eq!(cfg.plant.damping, 0.7);
        assert_eq!(cfg.plant.inertia, PlantConfig::setup1().inertia);
        assert!(!cfg.pid.anti_windup);
        assert_eq!(cfg.pid.kp, 2.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["sed = 1", "[plant]\ndampening = 1.0", "[train]\nsteps = 3", "[suite]\nsplnes = 1", "[extra]"] {
            assert!(matches!(parse(text), Err(PipelineError::Config(_))), "{text}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse("setup = 3").is_err());
        assert!(parse("[plant]\npressure_time_constant = -1.0").unwrap_err().exit_code() == 2);
        assert!(parse("[train]\nseed = 4").is_err());
    }

    #[test]
    fn overrides_win() {
        let file: ConfigFile = toml::from_str("seed = 3\nsetup = 1").unwrap();
        let o = Overrides { setup: Some(Setup::Loaded), seed: Some(9), ci_profile: true, out: Some("x".into()) };
        let (cfg, out) = resolve(file, Path::new("."), &o).unwrap();
        assert_eq!((cfg.setup, cfg.seed, cfg.ci_profile), (Setup::Loaded, 9, true));
        assert_eq!(out, Some(PathBuf::from("x")));
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let cfg = RunConfig::preset(Setup::Loaded, true);
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(cfg.hash(), RunConfig::preset(Setup::Loaded, false).hash());
    }
}

//! Optional `bodyfit.toml` in `$BODYFIT_CONFIG_DIR`. Every key mirrors a
//! command-line flag; flags win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

pub const CONFIG_DIR_ENV: &str = "BODYFIT_CONFIG_DIR";
pub const CONFIG_FILE: &str = "bodyfit.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub format: Option<String>,
    #[serde(default)]
    pub identify: IdentifySection,
    #[serde(default)]
    pub calibrate: CalibrateSection,
    #[serde(default)]
    pub couple: PlacementSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IdentifySection {
    pub root_height_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CalibrateSection {
    pub root_height_threshold: Option<f64>,
    pub sample_budget: Option<usize>,
    pub progress_every: Option<usize>,
    pub grid_rows: Option<usize>,
    pub grid_cols: Option<usize>,
    pub cell_size: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PlacementSection {
    pub spot: Option<String>,
    pub heading: Option<f64>,
    pub misalign: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateSection {
    pub body: Option<String>,
    pub exercise: Option<String>,
    pub noise: Option<f64>,
    pub orientation_noise: Option<f64>,
    pub seed: Option<u64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateSection {
    pub spot: Option<String>,
    pub heading: Option<f64>,
    pub misalign: Option<String>,
    pub shoulder_delta: Option<f64>,
    pub leg_delta: Option<f64>,
}

impl Config {
    pub fn path() -> Option<PathBuf> {
        std::env::var_os(CONFIG_DIR_ENV).map(|d| Path::new(&d).join(CONFIG_FILE))
    }

    /// Loads the config file if the directory is set and the file exists.
    pub fn load() -> Result<Self> {
        match Self::path() {
            Some(p) if p.exists() => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
            _ => Ok(Self::default()),
        }
    }
}

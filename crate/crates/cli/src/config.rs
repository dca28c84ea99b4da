use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use stump_core::fit::{AnnealConfig, OptimConfig};
use stump_core::geometry::{DEFAULT_ETA, DEFAULT_PSI};

/// Contents of `--config file.toml`. Command-line flags take precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Points drawn from a reference `.csg` when no point file is given.
    pub samples: usize,
    pub eta: f64,
    pub psi: f64,
    /// Surface samples per shape for Chamfer distance.
    pub chamfer_samples: usize,
    /// Marching-cubes resolution for surface sampling and meshes.
    pub resolution: usize,
    pub anneal: AnnealConfig,
    pub optim: OptimConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            samples: 1000,
            eta: DEFAULT_ETA,
            psi: DEFAULT_PSI,
            chamfer_samples: 2048,
            resolution: 128,
            anneal: AnnealConfig::default(),
            optim: OptimConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

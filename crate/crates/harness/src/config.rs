//! Run settings: defaults, an optional JSON config file, then CLI flags.

use std::path::Path;
use std::sync::Arc;

use realinterp::grid::{LogGrid, DEFAULT_PPO, DEFAULT_T_MIN};
use serde::{Deserialize, Serialize};

use crate::{usage, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

pub const DEFAULT_SEED: u64 = 7;

/// Everything a run depends on. Reports embed it, so a report is its own
/// reproducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub grid_ppo: u32,
    pub tmin: f64,
    pub seed: u64,
    pub format: Format,
    /// 0 uses every available core. Left out of reports: results do not
    /// depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub no_timestamp: bool,
    /// Overrides the per-suite corpus size.
    pub cases: Option<usize>,
    /// Overrides the lattices of the `baseq` suite.
    pub lattices: Vec<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            grid_ppo: DEFAULT_PPO,
            tmin: DEFAULT_T_MIN,
            seed: DEFAULT_SEED,
            format: Format::Text,
            workers: 0,
            no_timestamp: false,
            cases: None,
            lattices: Vec::new(),
        }
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<Arc<LogGrid>> {
        LogGrid::new(self.tmin, self.grid_ppo).map_err(|e| usage(e.to_string()))
    }

    pub fn cases_or(&self, default: usize) -> usize {
        self.cases.unwrap_or(default)
    }

    /// Grid, seed and corpus size at their defaults, i.e. the settings the
    /// checked-in baselines were recorded with.
    pub fn is_baseline_setup(&self) -> bool {
        let d = Self::default();
        self.grid_ppo == d.grid_ppo && self.tmin == d.tmin && self.seed == d.seed && self.cases.is_none()
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| HarnessError::Internal(e.to_string()))
    }

    /// Flags reproducing these settings on the command line.
    pub fn flags(&self) -> String {
        let mut s = format!("--grid-ppo {} --tmin {:e} --seed {}", self.grid_ppo, self.tmin, self.seed);
        if let Some(c) = self.cases {
            s.push_str(&format!(" --cases {c}"));
        }
        for l in &self.lattices {
            s.push_str(&format!(" --lattice '{l}'"));
        }
        s
    }
}

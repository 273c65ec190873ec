//! Checked-in ratio windows. Suites compare their windows against these
//! with a relative tolerance, catching regressions without hard-coding
//! the unknown universal constants.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::report::{Sig6, VerificationReport, WindowStat};
use crate::{HarnessError, Result};

pub const TOLERANCE: f64 = 0.10;

const CHECKED_IN: &str = include_str!("../baselines.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub min: Sig6,
    pub max: Sig6,
}

/// suite -> window name -> endpoints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baselines(pub BTreeMap<String, BTreeMap<String, Endpoints>>);

impl Baselines {
    pub fn checked_in() -> Self {
        serde_json::from_str(CHECKED_IN).expect("baselines.json is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("baselines {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Internal(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn get(&self, suite: &str, window: &str) -> Option<Endpoints> {
        self.0.get(suite)?.get(window).copied()
    }

    /// Replaces the entries of `report.suite` with its finite windows.
    pub fn record(&mut self, report: &VerificationReport) {
        let entry = self.0.entry(report.suite.clone()).or_default();
        entry.clear();
        for w in report.windows.iter().filter(|w| w.min.0.is_finite() && w.max.0.is_finite()) {
            entry.insert(w.name.clone(), Endpoints { min: w.min, max: w.max });
        }
    }

    /// Adds one baseline check per window of `report`. Baselines only
    /// apply to the settings they were recorded with; other setups and
    /// unknown windows are listed as skipped.
    pub fn compare(&self, report: &mut VerificationReport) {
        let windows: Vec<WindowStat> = report.windows.clone();
        if !report.settings.is_baseline_setup() {
            report.note("baseline comparison skipped: non-default grid, seed or corpus size");
            return;
        }
        for w in windows {
            let name = format!("baseline {}", w.name);
            match self.get(&report.suite, &w.name) {
                None => report.skip(name, "none"),
                Some(b) => {
                    let dev = rel_dev(w.min.0, b.min.0).max(rel_dev(w.max.0, b.max.0));
                    report.check_le(name, dev, TOLERANCE);
                }
            }
        }
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

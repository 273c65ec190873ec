//! Deterministic corpus generation: K-profiles, decreasing step
//! functions, sequences and operators written as flat files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realinterp::grid::{LogGrid, StepRearrangement};
use realinterp::kfunctional::check_quasi_concave;
use realinterp::lattice::{profile_corpus, random_concave_profile, ProfileShape};
use realinterp::schatten::CompactOperator;
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::{usage, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Power,
    LogPower,
    Step,
    RandomConcave,
    Sequence,
    Operator,
}

impl Family {
    pub const ALL: [Family; 6] =
        [Self::Power, Self::LogPower, Self::Step, Self::RandomConcave, Self::Sequence, Self::Operator];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Power => "power",
            Self::LogPower => "log-power",
            Self::Step => "step",
            Self::RandomConcave => "random-concave",
            Self::Sequence => "sequence",
            Self::Operator => "operator",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| usage(format!("unknown family {s:?}; known: power, log-power, step, random-concave, sequence, operator")))
    }

    fn default_count(self) -> usize {
        match self {
            Self::Power => 3,
            Self::LogPower => 4,
            Self::Step => 5,
            Self::RandomConcave => 10,
            Self::Sequence => 3,
            Self::Operator => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub families: Vec<Family>,
    pub counts: BTreeMap<Family, usize>,
    pub tmin: f64,
    pub grid_ppo: u32,
}

impl CorpusSpec {
    pub fn new(settings: &Settings, families: &[Family], counts: &[(Family, usize)]) -> Self {
        let families = if families.is_empty() { Family::ALL.to_vec() } else { families.to_vec() };
        let mut map: BTreeMap<Family, usize> = families.iter().map(|&f| (f, f.default_count())).collect();
        for &(f, n) in counts {
            map.insert(f, n);
        }
        Self { seed: settings.seed, families, counts: map, tmin: settings.tmin, grid_ppo: settings.grid_ppo }
    }

    fn count(&self, f: Family) -> usize {
        self.counts.get(&f).copied().unwrap_or_else(|| f.default_count())
    }
}

/// One generated file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub family: Family,
    pub description: String,
    #[serde(skip)]
    pub contents: String,
}

fn profile_csv(grid: &LogGrid, k: impl Fn(f64) -> f64) -> Result<String> {
    let ts: Vec<f64> = grid.nodes().iter().rev().copied().collect();
    let ks: Vec<f64> = ts.iter().map(|&t| k(t)).collect();
    check_quasi_concave(&ts, &ks, 1e-10)?;
    let mut s = String::from("t,value\n");
    for (t, v) in ts.iter().zip(&ks) {
        writeln!(s, "{t},{v}").expect("write to string");
    }
    Ok(s)
}

fn step_csv(f: &StepRearrangement) -> String {
    let mut s = String::from("start,end,level\n");
    for (level, a, b) in f.cells() {
        writeln!(s, "{a},{b},{level}").expect("write to string");
    }
    s
}

fn operator_csv(m: &CompactOperator) -> String {
    let n = m.dim();
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| {
                let z = m.entry(i, j);
                if z.im == 0.0 {
                    format!("{}", z.re)
                } else {
                    format!("{},{}", z.re, z.im)
                }
            })
            .collect();
        s.push_str(&row.join(";"));
        s.push('\n');
    }
    s
}

/// Deterministic in `spec`: the same spec gives byte-identical entries.
/// Profiles are validated as quasi-concave before emission.
pub fn gen_corpus(spec: &CorpusSpec) -> Result<Vec<CorpusEntry>> {
    let grid: Arc<LogGrid> = LogGrid::new(spec.tmin, spec.grid_ppo).map_err(|e| usage(e.to_string()))?;
    let mut out = Vec::new();
    for &fam in &spec.families {
        let n = spec.count(fam);
        // one stream per family, so counts of one family do not shift another
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (fam as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let tag = fam.tag();
        for i in 0..n {
            let (description, contents) = match fam {
                Family::Power => {
                    let g = (i + 1) as f64 / (n + 1) as f64;
                    (format!("K(t) = min(t,1)^{g}"), profile_csv(&grid, |t| t.min(1.0).powf(g))?)
                }
                Family::LogPower => {
                    let shapes: Vec<_> = profile_corpus(0, 0, spec.tmin)
                        .into_iter()
                        .filter(|p| matches!(p.shape, ProfileShape::PowerLog { g, d } if g > 0.0 && d != 0))
                        .filter(|p| p.is_k_profile(&grid))
                        .collect();
                    let p = &shapes[i % shapes.len()];
                    (format!("K(t) = {}", p.name), profile_csv(&grid, |t| p.eval(t))?)
                }
                Family::RandomConcave => {
                    let p = random_concave_profile(&mut rng, spec.tmin);
                    let desc = format!("piecewise-linear concave, {} breakpoints", p.breakpoints().len());
                    (desc, profile_csv(&grid, |t| p.eval(t))?)
                }
                Family::Step => {
                    let m = rng.random_range(1..=16usize);
                    let cells: Vec<(f64, f64)> = (0..m)
                        .map(|_| (rng.random_range(-3.0f64..3.0).exp(), rng.random_range(0.0f64..1.0)))
                        .collect();
                    let total: f64 = cells.iter().map(|c| c.1).sum();
                    let f = StepRearrangement::from_cells(cells.into_iter().map(|(l, w)| (l, w / total)))?;
                    (format!("decreasing step function, {} steps", f.levels().len()), step_csv(&f))
                }
                Family::Sequence => {
                    let beta = [0.5, 1.0, 2.0].get(i).copied().unwrap_or(0.5 * (i + 1) as f64);
                    let len = 1000;
                    let mut s = String::from("n,value\n");
                    for j in 1..=len {
                        writeln!(s, "{j},{}", (j as f64).powf(-beta)).expect("write to string");
                    }
                    (format!("a_j = j^-{beta}, j <= {len}"), s)
                }
                Family::Operator => {
                    if i == 0 {
                        ("discretized Volterra operator, n = 32".to_string(), operator_csv(&CompactOperator::volterra(32)?))
                    } else {
                        let seed = rng.random::<u64>();
                        (format!("complex Gaussian 16x16, seed {seed}"), operator_csv(&CompactOperator::random_gaussian(16, seed)?))
                    }
                }
            };
            let ext = if fam == Family::Operator { "op.csv" } else { "csv" };
            out.push(CorpusEntry { file: format!("{tag}-{i:03}.{ext}"), family: fam, description, contents });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a CorpusSpec,
    entries: &'a [CorpusEntry],
}

/// Writes the entries and a `manifest.json` into `dir`.
pub fn write_corpus(spec: &CorpusSpec, entries: &[CorpusEntry], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for e in entries {
        std::fs::write(dir.join(&e.file), &e.contents)?;
    }
    let mut m = serde_json::to_string_pretty(&Manifest { spec, entries }).map_err(|e| HarnessError::Internal(e.to_string()))?;
    m.push('\n');
    std::fs::write(dir.join("manifest.json"), m)?;
    Ok(())
}

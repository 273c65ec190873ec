//! Verification suites, registered by name.

mod baseq;
mod classic;
mod grand;
mod reiter;
mod sequences;

use std::sync::Arc;
use std::time::Instant;

use realinterp::extrapolate::{RatioCase, RatioWindow};
use realinterp::grid::LogGrid;
use realinterp::lattice::LatticeParam;

use crate::baselines::Baselines;
use crate::config::Settings;
use crate::report::{Sig6, VerificationReport, WindowStat};
use crate::{usage, Result};

/// Everything a suite needs besides its own parameters.
pub struct Context {
    pub settings: Settings,
    pub grid: Arc<LogGrid>,
    pub pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(settings: Settings) -> Result<Self> {
        let grid = settings.grid()?;
        let pool = settings.pool()?;
        Ok(Self { settings, grid, pool })
    }

    /// Order-preserving parallel map over the worker pool.
    pub fn par_map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        use rayon::prelude::*;
        self.pool.install(|| items.par_iter().map(&f).collect())
    }
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Adds checks, windows and cases to `report`.
    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()>;
}

pub fn registry() -> Vec<Box<dyn Suite>> {
    vec![
        Box::new(classic::Wtilde),
        Box::new(classic::EquivK),
        Box::new(baseq::Baseq),
        Box::new(classic::Tnorm),
        Box::new(grand::Fk),
        Box::new(classic::Pisier),
        Box::new(sequences::Hardy),
        Box::new(sequences::Matsaev),
        Box::new(sequences::Ideals),
        Box::new(classic::Limits),
        Box::new(grand::Llogl),
        Box::new(reiter::Reiter),
    ]
}

pub fn names() -> Vec<&'static str> {
    registry().iter().map(|s| s.name()).collect()
}

pub fn suite_by_name(name: &str) -> Result<Box<dyn Suite>> {
    registry()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| usage(format!("unknown suite {name:?}; known: {}", names().join(", "))))
}

/// Runs one suite, compares its windows with `baselines` and stamps the
/// runtime (and the wall-clock time unless disabled).
pub fn run_suite(name: &str, settings: &Settings, baselines: &Baselines) -> Result<VerificationReport> {
    let suite = suite_by_name(name)?;
    let ctx = Context::new(settings.clone())?;
    let mut report = VerificationReport::new(suite.name(), settings);
    let start = Instant::now();
    suite.run(&ctx, &mut report)?;
    baselines.compare(&mut report);
    report.finish();
    if !settings.no_timestamp {
        report.runtime_s = Some(Sig6::new(start.elapsed().as_secs_f64()));
        report.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    Ok(report)
}

/// Named lattices understood by `--lattice`; anything else goes through
/// [`LatticeParam::parse`].
pub fn lattice_by_name(name: &str) -> Result<(String, LatticeParam)> {
    let l = match name {
        "F11" => LatticeParam::f_bq(1.0, 1.0),
        "FK" => LatticeParam::fk(2.0),
        "L1" => LatticeParam::l1_haar(),
        "Linf" => LatticeParam::linf(),
        "Linf(1/t)" => LatticeParam::linf_inv_t(),
        spec => return LatticeParam::parse(spec).map(|l| (spec.to_string(), l)).map_err(|e| usage(e.to_string())),
    };
    Ok((name.to_string(), l))
}

pub(crate) fn outcome(c: &RatioCase) -> (f64, String) {
    match c {
        RatioCase::Finite(r) => (*r, "finite".into()),
        RatioCase::CoDivergent(r) => (*r, "co-divergent".into()),
        RatioCase::Excluded(why) => (f64::NAN, format!("excluded: {why}")),
        RatioCase::Counterexample(why) => (f64::NAN, format!("counterexample: {why}")),
    }
}

/// Records `cases` under `group` and returns their window stat (if any
/// ratio was usable).
pub(crate) fn record_cases(report: &mut VerificationReport, group: &str, cases: &[(String, RatioCase)]) -> Option<RatioWindow> {
    for (id, c) in cases {
        let (v, o) = outcome(c);
        report.case(group, id.clone(), v, o);
    }
    RatioWindow::from_cases(cases.iter().map(|(_, c)| c))
}

pub(crate) fn window_stat(name: &str, w: &RatioWindow, total: usize, drift: Option<f64>) -> WindowStat {
    WindowStat {
        name: name.to_string(),
        min: w.min.into(),
        median: w.median.into(),
        max: w.max.into(),
        used: w.used,
        excluded: total - w.used,
        drift: drift.map(Sig6::new),
    }
}

/// Window on a grid and on its refinement: records both, adds the stat
/// (with drift) and checks `drift < 5%`. Returns the coarse window.
pub(crate) fn refined_window(
    report: &mut VerificationReport,
    name: &str,
    coarse: &[(String, RatioCase)],
    fine: &[(String, RatioCase)],
) -> Option<RatioWindow> {
    let wc = record_cases(report, &format!("{name} coarse"), coarse);
    let wf = record_cases(report, &format!("{name} fine"), fine);
    match (wc, wf) {
        (Some(a), Some(b)) => {
            let drift = a.drift(&b);
            report.window(window_stat(name, &a, coarse.len(), Some(drift)));
            report.check_le(format!("{name}: refinement drift"), drift, 0.05);
            report.check(format!("{name}: window finite"), a.max / a.min, "<", f64::INFINITY, a.is_finite(), None);
            Some(a)
        }
        _ => {
            report.check(format!("{name}: window nonempty"), 0.0, ">", 0.0, false, None);
            None
        }
    }
}

/// First counterexample, if any.
pub(crate) fn first_counterexample(cases: &[(String, RatioCase)]) -> Option<&str> {
    cases
        .iter()
        .find(|(_, c)| matches!(c, RatioCase::Counterexample(_)))
        .map(|(n, _)| n.as_str())
}

//! Extrapolation norms against lattice norms of the K-functional.

use realinterp::extrapolate::{baseq_window, BaseqReport, BaseqSample, ExponentMap, BASAUX_FLOOR};
use realinterp::lattice::{profile_corpus, LatticeParam};

use super::{first_counterexample, lattice_by_name, record_cases, window_stat, Context, Suite};
use crate::report::VerificationReport;
use crate::Result;

/// Factor allowed between the `q = 1` and `q = inf` windows: both
/// embeddings between the inner spaces cost at most a factor 2 each way,
/// twice.
const Q_AGREEMENT: f64 = 8.0;

pub struct Baseq;

struct Target {
    name: String,
    lattice: LatticeParam,
    negative_control: bool,
}

fn targets(names: &[String]) -> Result<Vec<Target>> {
    if names.is_empty() {
        return Ok(vec![
            Target { name: "F_{1,1}".into(), lattice: LatticeParam::f_bq(1.0, 1.0), negative_control: false },
            Target { name: "FK".into(), lattice: LatticeParam::fk(2.0), negative_control: false },
            Target { name: "L1(ds/s)".into(), lattice: LatticeParam::l1_haar(), negative_control: false },
            Target { name: "Linf".into(), lattice: LatticeParam::linf(), negative_control: true },
        ]);
    }
    names
        .iter()
        .map(|n| lattice_by_name(n).map(|(name, lattice)| Target { name, lattice, negative_control: false }))
        .collect()
}

impl Suite for Baseq {
    fn name(&self) -> &'static str {
        "baseq"
    }

    fn summary(&self) -> &'static str {
        "|| t ||a||_{theta(t),q} ||_F against ||K(t,a)||_F over Conv0 profiles"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let targets = targets(&ctx.settings.lattices)?;
        let corpus = profile_corpus(ctx.settings.cases_or(20), ctx.settings.seed, ctx.grid.t_min());
        let fine = ctx.grid.refined();

        // samples[q][grid]
        let mut samples = Vec::new();
        for q in [1.0, f64::INFINITY] {
            let mut per_grid = Vec::new();
            for g in [&ctx.grid, &fine] {
                let members: Vec<_> = corpus.iter().filter(|p| p.is_k_profile(g)).collect();
                let built = ctx.par_map(&members, |p| BaseqSample::new(p, g, ExponentMap::Fixed(q)));
                per_grid.push(built.into_iter().collect::<realinterp::Result<Vec<_>>>()?);
            }
            let mut bad = 0usize;
            let mut worst = f64::INFINITY;
            let mut worst_at = None;
            for s in per_grid.iter().flatten() {
                let (m, b) = s.extrap.floor_margin(&s.k, 1e-9);
                bad += b;
                if m < worst {
                    worst = m;
                    worst_at = Some(s.name.clone());
                }
            }
            report.check(
                format!("floor q={q}: nodes with g < K/(2 sqrt e) - 1e-9"),
                bad as f64,
                "<=",
                0.0,
                bad == 0,
                worst_at.as_deref(),
            );
            report.note(format!("floor q={q}: smallest margin g - K/(2 sqrt e) = {worst:e}"));
            samples.push(per_grid);
        }

        for t in &targets {
            let mut windows = Vec::new();
            let mut passes = Vec::new();
            for (qi, q) in [1.0, f64::INFINITY].into_iter().enumerate() {
                let coarse = baseq_window(&samples[qi][0], &t.lattice)?;
                let fine = baseq_window(&samples[qi][1], &t.lattice)?;
                let label = format!("{} q={q}", t.name);
                record_cases(report, &format!("{label} coarse"), &coarse.cases);
                record_cases(report, &format!("{label} fine"), &fine.cases);
                let total = coarse.cases.len();
                let r = BaseqReport::assemble(coarse, fine);
                if let Some(w) = &r.coarse.window {
                    report.window(window_stat(&label, w, total, Some(r.drift)));
                }
                let counter = r.coarse.counterexamples().count() + r.fine.counterexamples().count();
                if t.negative_control {
                    report.case(format!("{} control", t.name), format!("q={q}"), counter as f64, "counterexamples");
                } else {
                    let who = first_counterexample(&r.coarse.cases).or_else(|| first_counterexample(&r.fine.cases));
                    report.check(format!("{label}: counterexamples"), counter as f64, "<=", 0.0, counter == 0, who);
                    let finite = r.coarse.window.is_some_and(|w| w.is_finite());
                    let spread = r.coarse.window.map_or(f64::INFINITY, |w| w.max / w.min);
                    report.check(format!("{label}: window finite (max/min)"), spread, "<", f64::INFINITY, finite, None);
                    let low = [&r.coarse, &r.fine]
                        .iter()
                        .filter_map(|w| w.window.map(|w| w.min))
                        .fold(f64::INFINITY, f64::min);
                    report.check(
                        format!("{label}: window min >= 1/(2 sqrt e)"),
                        low,
                        ">=",
                        BASAUX_FLOOR,
                        r.floor_ok,
                        None,
                    );
                    report.check_le(format!("{label}: refinement drift"), r.drift, 0.05);
                }
                passes.push(r.pass);
                windows.push(r.coarse.window);
            }
            let agree = match (windows[0], windows[1]) {
                (Some(a), Some(b)) => {
                    let f = (a.min.max(b.min) / a.min.min(b.min)).max(a.max.max(b.max) / a.max.min(b.max));
                    Some((f, a.agrees_with(&b, Q_AGREEMENT)))
                }
                _ => None,
            };
            if t.negative_control {
                let holds = passes.iter().all(|&p| p) && agree.is_some_and(|a| a.1);
                report.check(
                    format!("{}: negative control fails", t.name),
                    holds as u8 as f64,
                    "==",
                    0.0,
                    !holds,
                    None,
                );
            } else {
                let (f, ok) = agree.unwrap_or((f64::INFINITY, false));
                report.check(format!("{}: q=1 vs q=inf endpoint factor", t.name), f, "<=", Q_AGREEMENT, ok, None);
            }
        }
        Ok(())
    }
}

//! Grand Lebesgue norms and the `L Log L` identity.

use realinterp::extrapolate::RatioCase;
use realinterp::grand::{
    grand_norm_def, grand_norm_fk, llogl_divergent_example, rearrangement_corpus, verify_sum_identity, GrandParams,
    LogConvention,
};
use realinterp::grid::{LogGrid, StepRearrangement};

use super::{first_counterexample, refined_window, Context, Suite};
use crate::report::VerificationReport;
use crate::Result;

/// Golden-section maximum of a unimodal `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) < f(d) {
            a = c;
        } else {
            b = d;
        }
    }
    f(0.5 * (a + b))
}

pub struct Fk;

impl Suite for Fk {
    fn name(&self) -> &'static str {
        "fk"
    }

    fn summary(&self) -> &'static str {
        "grand Lebesgue norm: definition against the Fiorenza-Karadzhov form"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let gp = GrandParams::new(2.0, 1.0)?;
        let one = StepRearrangement::constant(1.0, 1.0)?;
        let d = grand_norm_def(&one, &gp);
        report.check_le("f = 1, p = 2: |def-norm - 1|", (d - 1.0).abs(), 2e-3);
        let oracle = golden_max(|t| ((1.0 - t) / (1.0 - t.ln())).sqrt(), 1e-12, 1.0);
        let fk = grand_norm_fk(&one, &gp, &ctx.grid);
        report.check_le("f = 1, p = 2: |FK-norm - max ((1-t)/(1-log t))^(1/2)|", (fk - oracle).abs(), 1e-3);

        let fine = ctx.grid.refined();
        let gp_fine = gp.refined();
        let n = ctx.settings.cases_or(10);
        let mut sides = Vec::new();
        for (g, gp) in [(&ctx.grid, &gp), (&fine, &gp_fine)] {
            let corpus = rearrangement_corpus(g, n, ctx.settings.seed);
            let cases = ctx.par_map(&corpus, |(name, f)| {
                let d = grand_norm_def(f, gp);
                let k = grand_norm_fk(f, gp, g);
                let c = if d.is_finite() && k.is_finite() && d > 0.0 {
                    RatioCase::Finite(k / d)
                } else {
                    RatioCase::Excluded(format!("def {d}, fk {k}"))
                };
                (name.clone(), c)
            });
            sides.push(cases);
        }
        refined_window(report, "FK/def p=2", &sides[0], &sides[1]);
        Ok(())
    }
}

/// An `L^1` density outside `L Log^alpha L`: `1 / (s log^b(e^2/s))` with
/// `1 < b <= 1 + alpha` (`b = 2` is the largest exponent keeping it
/// nonincreasing).
fn divergent_example(grid: &LogGrid, alpha: f64) -> Result<(StepRearrangement, String)> {
    let b = (1.0 + alpha).min(2.0);
    if b == 2.0 {
        return Ok((llogl_divergent_example(grid), "1/(s log^2(e^2/s))".into()));
    }
    let f = StepRearrangement::from_primitive(grid, |t| (2.0 - t.ln()).powf(1.0 - b) / (b - 1.0))?;
    Ok((f, format!("1/(s log^{b}(e^2/s))")))
}

pub struct Llogl;

impl Suite for Llogl {
    fn name(&self) -> &'static str {
        "llogl"
    }

    fn summary(&self) -> &'static str {
        "K-side int_0^1 K(t) (1+log(1/t))^(alpha-1) dt/t against the L Log^alpha L norm"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let one = StepRearrangement::constant(1.0, 1.0)?;
        let s = verify_sum_identity(&one, 1.0, LogConvention::OnePlusLog, &ctx.grid)?;
        report.check_le("f = 1: |K-side - 1|", (s.k_side.value - 1.0).abs(), 1e-3);
        report.check_le("f = 1: |LLogL-side - 2|", (s.llogl_side.value - 2.0).abs(), 1e-3);

        let fine = ctx.grid.refined();
        let n = ctx.settings.cases_or(10);
        let corpora = [rearrangement_corpus(&ctx.grid, n, ctx.settings.seed), rearrangement_corpus(&fine, n, ctx.settings.seed)];
        for (conv, tag) in [(LogConvention::OnePlusLog, "1+log"), (LogConvention::Log, "log")] {
            for alpha in [0.5, 1.0, 2.0] {
                let mut sides = Vec::new();
                for (g, corpus) in [&ctx.grid, &fine].into_iter().zip(&corpora) {
                    let cases = ctx.par_map(corpus, |(name, f)| {
                        let c = match verify_sum_identity(f, alpha, conv, g) {
                            Err(e) => RatioCase::Excluded(e.to_string()),
                            Ok(s) if !s.consistent() => RatioCase::Counterexample(format!(
                                "K-side divergent {}, LLogL-side divergent {}",
                                s.k_side.divergent, s.llogl_side.divergent
                            )),
                            Ok(s) => match s.ratio() {
                                Some(r) => RatioCase::Finite(r),
                                None => RatioCase::Excluded("both sides divergent".into()),
                            },
                        };
                        (name.clone(), c)
                    });
                    sides.push(cases);
                }
                let label = format!("LLogL/K alpha={alpha} {tag}");
                refined_window(report, &label, &sides[0], &sides[1]);
                let split: usize = sides
                    .iter()
                    .flatten()
                    .filter(|(_, c)| matches!(c, RatioCase::Counterexample(_)))
                    .count();
                let who = first_counterexample(&sides[0]).or_else(|| first_counterexample(&sides[1]));
                report.check(format!("{label}: one side divergent alone"), split as f64, "<=", 0.0, split == 0, who);

                let (bad, label) = divergent_example(&ctx.grid, alpha)?;
                let s = verify_sum_identity(&bad, alpha, conv, &ctx.grid)?;
                let both = s.k_side.divergent && s.llogl_side.divergent;
                report.check(
                    format!("alpha={alpha} {tag}: {label} diverges on both sides"),
                    both as u8 as f64,
                    "==",
                    1.0,
                    both,
                    Some(&label),
                );
            }
        }
        Ok(())
    }
}

//! Sequence spaces and operator ideals: the discrete Hardy chain, the
//! Matsaev inequality on the discretized Volterra operator and the
//! ideal-norm window for diagonal operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realinterp::extrapolate::{hardy_chain, RatioCase, RatioWindow};
use realinterp::kfunctional::SequenceData;
use realinterp::lattice::SeqLattice;
use realinterp::schatten::{ideal_extrap, ideal_norm_via_f, matsaev_chain, CompactOperator};

use super::{refined_window, window_stat, Context, Suite};
use crate::report::VerificationReport;
use crate::Result;

pub struct Hardy;

impl Suite for Hardy {
    fn name(&self) -> &'static str {
        "hardy"
    }

    fn summary(&self) -> &'static str {
        "||a||_p <= normalized continuous K-norm <= e ||a||_p for sequences"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let n = ctx.settings.cases_or(100);
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
        let seqs: Vec<SequenceData> = (0..n)
            .map(|_| {
                let len = rng.random_range(1..=200usize);
                let decay = rng.random_range(0.0..2.0);
                let v: Vec<f64> = (1..=len)
                    .map(|j| rng.random_range(-4.0f64..4.0).exp() * (j as f64).powf(-decay))
                    .collect();
                SequenceData::from_values(&v)
            })
            .collect::<realinterp::Result<_>>()?;
        for p in [1.5, 2.0, 4.0] {
            let checks = ctx.par_map(&seqs, |a| hardy_chain(a, p, 1e-3));
            let mut violations = 0usize;
            let mut first = None;
            let mut cases = Vec::with_capacity(n);
            for (i, c) in checks.into_iter().enumerate() {
                let c = c?;
                let id = format!("seq#{i}");
                if !(c.lower_ok && c.upper_ok) {
                    violations += 1;
                    first.get_or_insert(id.clone());
                }
                report.case(format!("p={p}"), &id, c.k_norm / c.lp, if c.lower_ok && c.upper_ok { "ok" } else { "violation" });
                cases.push(RatioCase::Finite(c.k_norm / c.lp));
            }
            if let Some(w) = RatioWindow::from_cases(&cases) {
                report.window(window_stat(&format!("K-norm/l^p p={p}"), &w, n, None));
            }
            report.check(format!("p={p}: chain violations (slack 1e-3)"), violations as f64, "<=", 0.0, violations == 0, first.as_deref());
        }
        Ok(())
    }
}

pub struct Matsaev;

impl Suite for Matsaev {
    fn name(&self) -> &'static str {
        "matsaev"
    }

    fn summary(&self) -> &'static str {
        "||V_R||_p <= max(p/(p-1), p) ||V_J||_p on the discretized Volterra operator"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let dims = [64usize, 128];
        let ops = dims.iter().map(|&n| CompactOperator::volterra(n)).collect::<realinterp::Result<Vec<_>>>()?;
        // the SVDs dominate; run them in parallel
        let parts = ctx.par_map(&ops, |v| {
            let (re, im) = v.components();
            re.s_numbers();
            im.s_numbers();
            (re, im)
        });
        for ((n, v), (re, im)) in dims.iter().zip(&ops).zip(&parts) {
            let sr = re.s_numbers();
            report.check_le(format!("n={n}: |s1(V_R) - 1/2|"), (sr[0] - 0.5).abs(), 1e-10);
            report.check_le(format!("n={n}: s2(V_R)"), sr[1], 1e-10);
            for p in [1.1f64, 1.5, 2.0, 3.0] {
                let c = (p / (p - 1.0)).max(p);
                let ratio = re.schatten_norm(p)? / (c * im.schatten_norm(p)?);
                report.check_le(format!("n={n} p={p}: ||V_R||_p / (max(p/(p-1),p) ||V_J||_p)"), ratio, 1.0);
            }
            let chain = matsaev_chain(v, &SeqLattice::matsaev(1.0))?;
            report.case("chain", format!("n={n}"), chain.realized, "xlog(V_R) / ideal_extrap(V_J)");
            report.case("chain", format!("n={n}"), chain.realized_via_k, "xlog(V_R) / ideal_via_f(V_J)");
            report.check_le(format!("n={n}: Matsaev inequality along p(n)"), chain.pointwise, 1.0);
        }
        Ok(())
    }
}

pub struct Ideals;

impl Suite for Ideals {
    fn name(&self) -> &'static str {
        "ideals"
    }

    fn summary(&self) -> &'static str {
        "||{sum_{j<=n} s_j}||_F against ||{||T||_p(n)}||_F for diagonal operators"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let lattice = SeqLattice::matsaev(1.0);
        let n_max = ctx.settings.cases_or(100_000);
        let betas = [0.5, 1.0, 2.0];
        let jobs: Vec<(f64, usize)> = [n_max / 2, n_max].iter().flat_map(|&n| betas.map(|b| (b, n))).collect();
        let ratios = ctx.par_map(&jobs, |&(beta, n)| -> realinterp::Result<(f64, f64)> {
            let s: Vec<f64> = (1..=n).map(|j| (j as f64).powf(-beta)).collect();
            Ok((ideal_extrap(&s, &lattice)?, ideal_norm_via_f(&s, &lattice)))
        });
        let mut sides: Vec<Vec<(String, RatioCase)>> = vec![Vec::new(), Vec::new()];
        for (i, ((beta, n), r)) in jobs.iter().zip(ratios).enumerate() {
            let (extrap, via_f) = r?;
            report.case(format!("N={n}"), format!("beta={beta}"), extrap, "||{||T||_p(n)}||");
            report.case(format!("N={n}"), format!("beta={beta}"), via_f, "||{sum s_j}||");
            sides[i / betas.len()].push((format!("beta={beta}"), RatioCase::Finite(extrap / via_f)));
        }
        refined_window(report, "extrap/K Matsaev alpha=1 (N/2 vs N)", &sides[0], &sides[1]);
        Ok(())
    }
}

//! Suites on single profiles and finite instances: the `w~` transform,
//! K-norm calibration and equivalence, operator norms on parameter
//! lattices, Pisier's vector-valued K-functional and the `theta -> 0`
//! limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realinterp::grid::{Measure, SampledFunction, StepRearrangement};
use realinterp::interpnorm::{check_equiv_k, limit_theta0, lp_norm_k, ThetaQ};
use realinterp::kfunctional::{pisier_k, pisier_product_k, VectorValuedInstance};
use realinterp::lattice::{
    canonical_corpus, estimate_op_norm, operator_by_name, profile_corpus, random_concave_profile, tilde_weight, LatticeParam,
};

use super::{Context, Suite};
use crate::report::VerificationReport;
use crate::Result;

const THETAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub struct Wtilde;

impl Suite for Wtilde {
    fn name(&self) -> &'static str {
        "wtilde"
    }

    fn summary(&self) -> &'static str {
        "w~(t) = int min(1, s/t) w(s) ds/s against closed forms"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let g = &ctx.grid;
        let one = SampledFunction::from_fn(g.clone(), Measure::Haar, |_| 1.0)?;
        let wt = tilde_weight(&one)?;
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            let want = 1.0 + g.u(k);
            worst = worst.max((wt.values()[k] - want).abs() / want);
        }
        report.check_le("w = 1: max rel. error vs 1 + log(1/t)", worst, 1e-6);

        // w = 1 - log s: w~ = 2 + 2u + u^2/2
        let lw = SampledFunction::from_fn(g.clone(), Measure::Haar, |s| 1.0 - s.ln())?;
        let wt = tilde_weight(&lw)?;
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            let u = g.u(k);
            worst = worst.max((wt.values()[k] - (2.0 + 2.0 * u + 0.5 * u * u)).abs() / (1.0 + u).powi(2));
        }
        report.check_le("w = 1 - log s: max error vs 2 + 2u + u^2/2, per (1+u)^2", worst, 1e-4);
        let monotone = wt.values().windows(2).all(|w| w[1] >= w[0]);
        report.check("w = 1 - log s: w~ nonincreasing in t", monotone as u8 as f64, "==", 1.0, monotone, None);
        Ok(())
    }
}

pub struct EquivK;

impl Suite for EquivK {
    fn name(&self) -> &'static str {
        "equivK"
    }

    fn summary(&self) -> &'static str {
        "normalized K-norm calibration and the restricted/full equivalence chain"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let g = &ctx.grid;
        let linear = SampledFunction::from_fn(g.clone(), Measure::Haar, |t| t)?;
        let mut worst = 0.0f64;
        let mut worst_at = String::new();
        for th in THETAS {
            for q in [1.0, 2.0, 5.0, f64::INFINITY] {
                let v = lp_norm_k(&linear, ThetaQ::new(th, q)?, true, false)?.value;
                report.case("calibration min(t,1)", format!("theta={th} q={q}"), v, "normalized full norm");
                if (v - 1.0).abs() > worst {
                    worst = (v - 1.0).abs();
                    worst_at = format!("theta={th} q={q}");
                }
            }
        }
        report.check("calibration: max |norm(min(t,1)) - 1|", worst, "<=", 1e-6, worst <= 1e-6, Some(&worst_at));

        let n = ctx.settings.cases_or(200);
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
        let profiles: Vec<_> = (0..n).map(|_| random_concave_profile(&mut rng, g.t_min())).collect();
        let cells: Vec<ThetaQ> = THETAS
            .iter()
            .flat_map(|&th| [1.0, 2.0, f64::INFINITY].map(|q| ThetaQ { theta: th, q }))
            .collect();
        let results = ctx.par_map(&profiles, |p| {
            let k = p.sample(g);
            cells.iter().map(|&c| check_equiv_k(&k, c)).collect::<realinterp::Result<Vec<_>>>()
        });
        let mut violations = 0usize;
        let mut first_bad: Option<String> = None;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (i, r) in results.into_iter().enumerate() {
            let checks = r?;
            // position of full/restricted inside [1, bound]
            let worst = checks.iter().map(|c| (c.ratio - 1.0) / (c.bound - 1.0)).fold(0.0, f64::max);
            let bad = checks.iter().filter(|c| !c.pass).count();
            for c in &checks {
                lo = lo.min(c.ratio);
                hi = hi.max(c.ratio);
            }
            violations += bad;
            if bad > 0 && first_bad.is_none() {
                first_bad = Some(format!("conv0#{i}"));
            }
            report.case("chain", format!("conv0#{i}"), worst, if bad == 0 { "ok" } else { "violation" });
        }
        report.check(
            format!("chain violations over {n} profiles x {} cells", cells.len()),
            violations as f64,
            "<=",
            0.0,
            violations == 0,
            first_bad.as_deref(),
        );
        report.note(format!("full/restricted ratios span [{lo:.6}, {hi:.6}]"));
        Ok(())
    }
}

pub struct Tnorm;

impl Suite for Tnorm {
    fn name(&self) -> &'static str {
        "tnorm"
    }

    fn summary(&self) -> &'static str {
        "corpus lower bounds for the norms of T, R, S_r, Q_r on parameter lattices"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let corpus = canonical_corpus(&ctx.grid, ctx.settings.cases_or(100), ctx.settings.seed);
        let t = operator_by_name("T")?;
        let est = estimate_op_norm(&*t, &LatticeParam::linf_inv_t(), &corpus)?;
        report.check(
            "T on Linf(1/t): |norm - 1|",
            (est.value - 1.0).abs(),
            "<=",
            1e-9,
            (est.value - 1.0).abs() <= 1e-9,
            est.argmax.as_deref(),
        );
        for b in [1.0, 2.0] {
            for q in [1.0, 2.0] {
                let lat = LatticeParam::f_bq(b, q);
                let est = estimate_op_norm(&*t, &lat, &corpus)?;
                let stated = 2f64.powf((b - 1.0) / q);
                let corrected = 2f64.powf(b - 1.0 / q);
                let who = est.argmax.as_deref();
                report.check(
                    format!("T on F_{{{b},{q}}} <= 2^((b-1)/q)"),
                    est.value,
                    "<=",
                    stated + 1e-6,
                    est.value <= stated + 1e-6,
                    who,
                );
                report.check(
                    format!("T on F_{{{b},{q}}} <= 2^(b-1/q)"),
                    est.value,
                    "<=",
                    corrected + 1e-6,
                    est.value <= corrected + 1e-6,
                    who,
                );
            }
        }
        for name in ["T", "R", "S:2", "Q:2"] {
            let op = operator_by_name(name)?;
            for (lname, lat) in [
                ("Linf(1/t)", LatticeParam::linf_inv_t()),
                ("F_{1,1}", LatticeParam::f_bq(1.0, 1.0)),
                ("G_{1,2}", LatticeParam::g_bq(1.0, 2.0)),
                ("Linf", LatticeParam::linf()),
            ] {
                match estimate_op_norm(&*op, &lat, &corpus) {
                    Ok(e) => report.case(
                        lname,
                        name,
                        e.value,
                        format!("argmax {} ({} used, {} skipped)", e.argmax.unwrap_or_default(), e.used, e.skipped),
                    ),
                    Err(e) => report.case(lname, name, f64::NAN, format!("skipped: {e}")),
                }
            }
        }
        Ok(())
    }
}

pub struct Pisier;

fn random_instance(rng: &mut ChaCha8Rng) -> Result<VectorValuedInstance> {
    let atoms = rng.random_range(1..=8usize);
    let mut weights = Vec::with_capacity(atoms);
    let mut dens = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        weights.push(rng.random_range(0.1..2.0));
        let steps = rng.random_range(1..=16usize);
        let cells: Vec<(f64, f64)> = (0..steps)
            .map(|_| (rng.random_range(0.01..5.0), rng.random_range(0.01..1.0)))
            .collect();
        let total: f64 = cells.iter().map(|c| c.1).sum();
        dens.push(StepRearrangement::from_cells(cells.into_iter().map(|(l, w)| (l, w / total)))?);
    }
    Ok(VectorValuedInstance::new(weights, dens)?)
}

impl Suite for Pisier {
    fn name(&self) -> &'static str {
        "pisier"
    }

    fn summary(&self) -> &'static str {
        "water-filling against product rearrangement for vector-valued K"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let ts: Vec<f64> = (0..10).map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 9.0)).collect();

        let one = StepRearrangement::constant(1.0, 1.0)?;
        let single = VectorValuedInstance::new(
            vec![1.0],
            vec![StepRearrangement::new(vec![0.0, 0.3, 1.0], vec![2.0, 0.5])?],
        )?;
        let twin = VectorValuedInstance::new(vec![0.5, 0.5], vec![one.clone(), one])?;
        let mut exact = 0.0f64;
        for &t in &ts {
            let want = single.atom_k(0, t);
            exact = exact.max((pisier_k(t, &single)? - want).abs()).max((pisier_product_k(t, &single)? - want).abs());
            // identical atoms of total mass 1 with density 1: K(t) = min(t, 1)
            let want = t.min(1.0);
            exact = exact.max((pisier_k(t, &twin)? - want).abs()).max((pisier_product_k(t, &twin)? - want).abs());
        }
        report.check_le("analytic instances: max abs. error", exact, 1e-12);

        let n = ctx.settings.cases_or(100);
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
        let instances = (0..n).map(|_| random_instance(&mut rng)).collect::<Result<Vec<_>>>()?;
        let diffs = ctx.par_map(&instances, |inst| -> realinterp::Result<f64> {
            let mut worst = 0.0f64;
            for &t in &ts {
                let a = pisier_k(t, inst)?;
                let b = pisier_product_k(t, inst)?;
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
            Ok(worst)
        });
        let mut worst = 0.0f64;
        let mut worst_at = String::new();
        for (i, d) in diffs.into_iter().enumerate() {
            let d = d?;
            report.case("random", format!("instance#{i}"), d, "max rel. difference");
            if d >= worst {
                worst = d;
                worst_at = format!("instance#{i}");
            }
        }
        report.check(
            format!("{n} random instances: max rel. |waterfill - product|"),
            worst,
            "<=",
            1e-6,
            worst <= 1e-6,
            Some(&worst_at),
        );
        Ok(())
    }
}

pub struct Limits;

impl Suite for Limits {
    fn name(&self) -> &'static str {
        "limits"
    }

    fn summary(&self) -> &'static str {
        "normalized full K-norms on theta = 2^-k tend to the plateau K(1)"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let g = &ctx.grid;
        let corpus: Vec<_> = profile_corpus(ctx.settings.cases_or(20), ctx.settings.seed, g.t_min())
            .into_iter()
            .filter(|p| p.is_k_profile(g))
            .collect();
        for q in [1.0, 2.0] {
            let ladders = ctx.par_map(&corpus, |p| limit_theta0(&p.sample(g), q));
            let mut worst = 0.0f64;
            let mut worst_at = String::new();
            let mut excluded = 0usize;
            for (p, l) in corpus.iter().zip(ladders) {
                let l = l?;
                // larger rungs may be infinite (t^{1/2} at theta = 1/2); only
                // the last one decides membership
                if !l.values.last().is_some_and(|v| v.is_finite()) {
                    excluded += 1;
                    report.case(format!("q={q}"), &p.name, f64::INFINITY, "excluded: not in A_theta,q for small theta");
                    continue;
                }
                report.case(format!("q={q}"), &p.name, l.final_rel_err, "rel. error at theta = 2^-14");
                if l.final_rel_err >= worst {
                    worst = l.final_rel_err;
                    worst_at = p.name.clone();
                }
            }
            report.check(
                format!("q={q}: max rel. error vs K(1) at theta = 2^-14"),
                worst,
                "<=",
                0.01,
                worst <= 0.01,
                Some(&worst_at),
            );
            if excluded > 0 {
                report.note(format!("q={q}: {excluded} profiles excluded (norm infinite for small theta)"));
            }
        }
        Ok(())
    }
}

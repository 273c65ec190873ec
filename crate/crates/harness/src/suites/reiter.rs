//! Reiteration: lattice norms of K-functionals of reiterated pairs against
//! those of the original pair.

use realinterp::extrapolate::{limiting_reiteration_cases, lp_linf_case, reiteration_cases, RatioCase};
use realinterp::grand::rearrangement_corpus;
use realinterp::lattice::{profile_corpus, LatticeParam};

use super::{refined_window, Context, Suite};
use crate::report::VerificationReport;
use crate::Result;

pub struct Reiter;

const THETA: f64 = 0.5;

impl Suite for Reiter {
    fn name(&self) -> &'static str {
        "reiter"
    }

    fn summary(&self) -> &'static str {
        "<L^4,Linf>_F vs <L^2,Linf>_F, Holmstedt reiteration and the limiting instance"
    }

    fn run(&self, ctx: &Context, report: &mut VerificationReport) -> Result<()> {
        let fine = ctx.grid.refined();
        let grids = [&ctx.grid, &fine];
        let f11 = LatticeParam::f_bq(1.0, 1.0);
        let l1 = LatticeParam::l1_haar();
        let n = ctx.settings.cases_or(10);

        let mut sides = Vec::new();
        let mut skipped = Vec::new();
        for g in grids {
            // power singularities s^-b with b >= 1/4 are not in L^4
            let corpus: Vec<_> = rearrangement_corpus(g, n, ctx.settings.seed)
                .into_iter()
                .filter(|(name, _)| {
                    let keep = !name.starts_with("s^-");
                    if !keep && !skipped.contains(name) {
                        skipped.push(name.clone());
                    }
                    keep
                })
                .collect();
            let cases = ctx.par_map(&corpus, |(name, f)| {
                (name.clone(), lp_linf_case(f, 4.0, 2.0, &f11, g).unwrap_or_else(|e| RatioCase::Excluded(e.to_string())))
            });
            sides.push(cases);
        }
        refined_window(report, "<L4,Linf>/<L2,Linf> F_{1,1}", &sides[0], &sides[1]);
        if !skipped.is_empty() {
            report.note(format!("not in L^4, left out: {}", skipped.join(", ")));
        }

        let profiles = profile_corpus(ctx.settings.cases_or(20), ctx.settings.seed, ctx.grid.t_min());
        let mut holm = [Vec::new(), Vec::new()];
        let mut lim = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for (gi, g) in grids.into_iter().enumerate() {
            let members: Vec<_> = profiles.iter().filter(|p| p.is_k_profile(g)).collect();
            let out = ctx.par_map(&members, |p| {
                let k = p.sample(g);
                let excl = |e: realinterp::Error| {
                    let c = RatioCase::Excluded(e.to_string());
                    (c.clone(), c)
                };
                let h = reiteration_cases(&k, THETA, &l1).unwrap_or_else(excl);
                let l = limiting_reiteration_cases(&k, THETA, &l1).unwrap_or_else(excl);
                (p.name.clone(), h, l)
            });
            for (name, h, l) in out {
                // the backward ratio is the reciprocal; one window suffices
                holm[gi].push((name.clone(), h.0));
                lim[2 * gi].push((name.clone(), l.0));
                lim[2 * gi + 1].push((name, l.1));
            }
        }
        refined_window(report, "Holmstedt K(A_1/2,1, A_1)/K L1(ds/s)", &holm[0], &holm[1]);
        refined_window(report, "limiting K(A_0, A_1/2,inf)/K L1(ds/s)", &lim[0], &lim[2]);
        refined_window(report, "limiting K(t)/K(t^2) L1(ds/s)", &lim[1], &lim[3]);
        Ok(())
    }
}

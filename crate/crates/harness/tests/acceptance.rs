//! One PASS/FAIL line per acceptance criterion, run at the default
//! settings. Criteria that fail for documented reasons print FAIL and do
//! not fail the target; any other failure does.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use realinterp_harness::baselines::Baselines;
use realinterp_harness::config::Settings;
use realinterp_harness::report::{Check, Status, VerificationReport};
use realinterp_harness::suites::run_suite;

struct Criterion {
    id: u32,
    title: &'static str,
    suite: &'static str,
    budget_s: f64,
    /// Checks of the suite report that decide the criterion.
    selects: fn(&str) -> bool,
    /// Checks expected to FAIL; empty for criteria expected to pass.
    known_failures: &'static [&'static str],
}

fn not_baseline(name: &str) -> bool {
    !name.starts_with("baseline ")
}

fn baseq_two_sided(name: &str) -> bool {
    ["F_{1,1}", "FK ", "FK:", "L1(ds/s)", "Linf: negative control"].iter().any(|p| name.starts_with(p))
}

fn t_stated(name: &str) -> bool {
    name.starts_with("T on Linf(1/t)") || name.ends_with("<= 2^((b-1)/q)")
}

const CRITERIA: [Criterion; 14] = [
    Criterion {
        id: 1,
        title: "w~ exact for w = 1",
        suite: "wtilde",
        budget_s: 1.0,
        selects: |n| n.starts_with("w = 1:"),
        known_failures: &[],
    },
    Criterion {
        id: 2,
        title: "K-norm calibration on min(t,1)",
        suite: "equivK",
        budget_s: 1.0,
        selects: |n| n.starts_with("calibration"),
        known_failures: &[],
    },
    Criterion {
        id: 3,
        title: "restricted/full K-norm chain",
        suite: "equivK",
        budget_s: 30.0,
        selects: |n| n.starts_with("chain violations"),
        known_failures: &[],
    },
    Criterion {
        id: 4,
        title: "extrapolation floor K/(2 sqrt e)",
        suite: "baseq",
        budget_s: 30.0,
        selects: |n| n.starts_with("floor "),
        known_failures: &[],
    },
    Criterion {
        id: 5,
        title: "two-sided extrapolation windows + Linf control",
        suite: "baseq",
        budget_s: 120.0,
        selects: baseq_two_sided,
        known_failures: &["L1(ds/s) q=1: counterexamples", "L1(ds/s) q=inf: counterexamples"],
    },
    Criterion {
        id: 6,
        title: "T-norm bounds 1 and 2^((b-1)/q)",
        suite: "tnorm",
        budget_s: 10.0,
        selects: t_stated,
        known_failures: &["T on F_{1,2} <= 2^((b-1)/q)", "T on F_{2,2} <= 2^((b-1)/q)"],
    },
    Criterion {
        id: 7,
        title: "grand Lebesgue def-norm vs FK-norm",
        suite: "fk",
        budget_s: 60.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 8,
        title: "Pisier water-filling = product rearrangement",
        suite: "pisier",
        budget_s: 10.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 9,
        title: "discrete Hardy chain with constant e",
        suite: "hardy",
        budget_s: 20.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 10,
        title: "Matsaev inequality on Volterra",
        suite: "matsaev",
        budget_s: 180.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 11,
        title: "ideal-norm window, N vs N/2",
        suite: "ideals",
        budget_s: 60.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 12,
        title: "theta -> 0 limit equals K(1)",
        suite: "limits",
        budget_s: 20.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 13,
        title: "L Log L identity and divergence",
        suite: "llogl",
        budget_s: 30.0,
        selects: not_baseline,
        known_failures: &[],
    },
    Criterion {
        id: 14,
        title: "reiteration windows",
        suite: "reiter",
        budget_s: 60.0,
        selects: not_baseline,
        known_failures: &[],
    },
];

fn fmt_check(c: &Check) -> String {
    format!("{}: {} {} {}", c.name, c.realized, c.relation, c.bound)
}

fn main() -> ExitCode {
    let settings = Settings { no_timestamp: true, ..Settings::default() };
    let baselines = Baselines::checked_in();
    let mut runs: BTreeMap<&str, (VerificationReport, f64)> = BTreeMap::new();
    let mut unexpected = 0;

    for c in &CRITERIA {
        if !runs.contains_key(c.suite) {
            let start = Instant::now();
            match run_suite(c.suite, &settings, &baselines) {
                Ok(r) => {
                    runs.insert(c.suite, (r, start.elapsed().as_secs_f64()));
                }
                Err(e) => {
                    println!("criterion {:>2} FAIL  {}: suite {} errored: {e}", c.id, c.title, c.suite);
                    unexpected += 1;
                    continue;
                }
            }
        }
        let (report, secs) = &runs[c.suite];
        let checks: Vec<&Check> = report.checks.iter().filter(|k| (c.selects)(&k.name)).collect();
        let failed: Vec<&Check> = checks.iter().copied().filter(|k| k.status == Status::Fail).collect();
        let in_time = *secs < c.budget_s;
        let pass = !checks.is_empty() && failed.is_empty() && in_time;
        println!(
            "criterion {:>2} {}  {} [{} checks, {} {:.2}s < {}s]",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.title,
            checks.len(),
            c.suite,
            secs,
            c.budget_s
        );
        for k in &failed {
            println!("    failed  {}", fmt_check(k));
        }
        if c.id == 6 {
            for k in report.checks.iter().filter(|k| k.name.ends_with("<= 2^(b-1/q)")) {
                println!("    corrected bound {:?}  {}", k.status, fmt_check(k));
            }
        }
        let expected = !checks.is_empty()
            && in_time
            && failed.len() == c.known_failures.len()
            && failed.iter().all(|k| c.known_failures.contains(&k.name.as_str()));
        if !expected {
            unexpected += 1;
            if checks.is_empty() {
                println!("    no checks matched");
            }
            if !in_time {
                println!("    over the time budget");
            }
        }
    }
    if unexpected == 0 {
        println!("acceptance: outcomes as recorded (criteria 5 and 6 fail for documented reasons)");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} criteria deviate from the recorded outcome");
        ExitCode::FAILURE
    }
}

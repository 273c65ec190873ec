//! Verification reports and their JSON, CSV and text-table renderings.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::{Format, Settings};
use crate::{HarnessError, Result};

/// A number rounded to 6 significant digits. Non-finite values serialize
/// as the strings `"inf"`, `"-inf"` and `"nan"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sig6(pub f64);

impl Sig6 {
    pub fn new(x: f64) -> Self {
        if !x.is_finite() || x == 0.0 {
            return Self(x);
        }
        Self(format!("{x:.5e}").parse().expect("formatted float parses"))
    }
}

impl From<f64> for Sig6 {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl fmt::Display for Sig6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x.is_nan() {
            f.pad("nan")
        } else if x.is_infinite() {
            f.pad(if x > 0.0 { "inf" } else { "-inf" })
        } else if x == 0.0 || (1e-4..1e7).contains(&x.abs()) {
            f.pad(&format!("{x}"))
        } else {
            let s = format!("{x:.5e}");
            // trim trailing zeros of the mantissa
            let (m, e) = s.split_once('e').expect("exponent form");
            let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
            f.pad(&format!("{m}e{e}"))
        }
    }
}

impl Serialize for Sig6 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Sig6 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Self::new(x)),
            Raw::Text(s) => match s.as_str() {
                "inf" => Ok(Self(f64::INFINITY)),
                "-inf" => Ok(Self(f64::NEG_INFINITY)),
                "nan" => Ok(Self(f64::NAN)),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Skip => "SKIP",
        })
    }
}

/// One assertion `realized <relation> bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub realized: Sig6,
    pub relation: String,
    pub bound: Sig6,
    pub status: Status,
    /// Command line and case id that reproduce a failure.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reproducer: Option<String>,
}

/// Two-sided ratio window over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub name: String,
    pub min: Sig6,
    pub median: Sig6,
    pub max: Sig6,
    pub used: usize,
    pub excluded: usize,
    /// Largest relative endpoint change under grid refinement.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub drift: Option<Sig6>,
}

/// One corpus member in one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub group: String,
    pub case: String,
    pub value: Sig6,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub status: Status,
    pub settings: Settings,
    pub checks: Vec<Check>,
    pub windows: Vec<WindowStat>,
    pub cases: Vec<CaseRow>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_s: Option<Sig6>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<u64>,
}

impl VerificationReport {
    pub fn new(suite: &str, settings: &Settings) -> Self {
        Self {
            suite: suite.to_string(),
            status: Status::Skip,
            settings: settings.clone(),
            checks: Vec::new(),
            windows: Vec::new(),
            cases: Vec::new(),
            notes: Vec::new(),
            runtime_s: None,
            timestamp: None,
        }
    }

    fn reproducer(&self, case: Option<&str>) -> String {
        let mut s = format!("realinterp suite {} {}", self.suite, self.settings.flags());
        if let Some(c) = case {
            s.push_str(&format!(" # case {c}"));
        }
        s
    }

    fn push(&mut self, name: String, realized: f64, relation: &str, bound: f64, ok: bool, case: Option<&str>) -> bool {
        let status = if ok { Status::Pass } else { Status::Fail };
        let reproducer = (!ok).then(|| self.reproducer(case));
        self.checks.push(Check {
            name,
            realized: realized.into(),
            relation: relation.into(),
            bound: bound.into(),
            status,
            reproducer,
        });
        ok
    }

    /// `realized <= bound`.
    pub fn check_le(&mut self, name: impl Into<String>, realized: f64, bound: f64) -> bool {
        self.push(name.into(), realized, "<=", bound, realized <= bound, None)
    }

    /// `realized >= bound`.
    pub fn check_ge(&mut self, name: impl Into<String>, realized: f64, bound: f64) -> bool {
        self.push(name.into(), realized, ">=", bound, realized >= bound, None)
    }

    /// Boolean outcome with the realized value for the record; `case` names
    /// the worst offender for the reproducer.
    pub fn check(&mut self, name: impl Into<String>, realized: f64, relation: &str, bound: f64, ok: bool, case: Option<&str>) -> bool {
        self.push(name.into(), realized, relation, bound, ok, case)
    }

    pub fn skip(&mut self, name: impl Into<String>, why: &str) {
        self.checks.push(Check {
            name: name.into(),
            realized: Sig6(f64::NAN),
            relation: why.into(),
            bound: Sig6(f64::NAN),
            status: Status::Skip,
            reproducer: None,
        });
    }

    pub fn case(&mut self, group: impl Into<String>, case: impl Into<String>, value: f64, outcome: impl Into<String>) {
        self.cases.push(CaseRow { group: group.into(), case: case.into(), value: value.into(), outcome: outcome.into() });
    }

    pub fn window(&mut self, w: WindowStat) {
        self.windows.push(w);
    }

    pub fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_window(&self, name: &str) -> Option<&WindowStat> {
        self.windows.iter().find(|w| w.name == name)
    }

    /// FAIL if any check failed, SKIP if nothing was checked.
    pub fn finish(&mut self) {
        self.status = if self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else if self.checks.iter().any(|c| c.status == Status::Pass) {
            Status::Pass
        } else {
            Status::Skip
        };
    }

    pub fn emit(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self).map_err(|e| HarnessError::Internal(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(out)?,
            Format::Text => self.write_text(out)?,
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Internal(format!("report: {e}")))
    }

    /// One row per case, then one per check.
    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| HarnessError::Internal(e.to_string());
        w.write_record(["suite", "kind", "group", "case", "value", "status"]).map_err(csv_err)?;
        for c in &self.cases {
            w.write_record([&self.suite, "case", &c.group, &c.case, &c.value.to_string(), &c.outcome])
                .map_err(csv_err)?;
        }
        for c in &self.checks {
            let value = format!("{} {} {}", c.realized, c.relation, c.bound);
            w.write_record([&self.suite, "check", "", &c.name, &value, &c.status.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_text(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "suite {}: {}", self.suite, self.status)?;
        writeln!(out, "settings: {}", self.settings.flags())?;
        if let Some(r) = self.runtime_s {
            writeln!(out, "runtime: {r} s")?;
        }
        if let Some(t) = self.timestamp {
            writeln!(out, "timestamp: {t}")?;
        }
        writeln!(out)?;
        writeln!(out, "{:<56} {:>13} {:^4} {:<13} {}", "check", "realized", "", "bound", "status")?;
        for c in &self.checks {
            writeln!(
                out,
                "{:<56} {:>13} {:^4} {:<13} {}",
                clip(&c.name, 56),
                c.realized,
                clip(&c.relation, 4),
                c.bound,
                c.status
            )?;
        }
        if !self.windows.is_empty() {
            writeln!(out)?;
            writeln!(
                out,
                "{:<44} {:>13} {:>13} {:>13} {:>5} {:>5} {:>11}",
                "window", "min", "median", "max", "used", "excl", "drift"
            )?;
            for w in &self.windows {
                let drift = w.drift.map_or("-".to_string(), |d| d.to_string());
                writeln!(
                    out,
                    "{:<44} {:>13} {:>13} {:>13} {:>5} {:>5} {:>11}",
                    clip(&w.name, 44),
                    w.min,
                    w.median,
                    w.max,
                    w.used,
                    w.excluded,
                    drift
                )?;
            }
        }
        let failing: Vec<&Check> = self.checks.iter().filter(|c| c.status == Status::Fail).collect();
        if !failing.is_empty() {
            writeln!(out)?;
            writeln!(out, "reproducers:")?;
            for c in failing {
                writeln!(out, "  {}: {}", c.name, c.reproducer.as_deref().unwrap_or("-"))?;
            }
        }
        for n in &self.notes {
            writeln!(out, "note: {n}")?;
        }
        writeln!(out, "cases: {}", self.cases.len())?;
        Ok(())
    }
}

fn clip(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let mut c: String = s.chars().take(n - 1).collect();
        c.push('~');
        c
    }
}

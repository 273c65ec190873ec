//! Norm evaluators for `realinterp norm <which> --input <file|spec>`,
//! looked up by name.

use std::path::Path;
use std::sync::Arc;

use realinterp::extrapolate::{extrap_norm_k, ExponentMap};
use realinterp::grand::{grand_norm_def, grand_norm_fk, llogl_alpha_norm, GrandParams, LogConvention};
use realinterp::grid::{LogGrid, Measure, SampledFunction, StepRearrangement};
use realinterp::interpnorm::{lp_norm_k, ThetaQ};
use realinterp::kfunctional::{k_l1_linf, SequenceData};
use realinterp::lattice::{lattice_norm, LatticeNorm};
use realinterp::schatten::CompactOperator;
use serde::{Deserialize, Serialize};

use crate::report::Sig6;
use crate::suites::lattice_by_name;
use crate::{usage, Result};

/// Parsed `--input`.
#[derive(Debug, Clone)]
pub enum Input {
    /// K-profile samples `(t, value)` with `t` increasing.
    Profile(Vec<(f64, f64)>),
    /// `t^g (1 - log t)^d`.
    PowerLog { g: f64, d: f64 },
    Rearrangement(StepRearrangement),
    Sequence(SequenceData),
    Operator(CompactOperator),
}

impl Input {
    /// A file path, or one of the spec strings `power:<g>`,
    /// `powerlog:<g>,<d>`, `step:<level>@<width>,...`, `seq:<beta>,<len>`,
    /// `volterra:<n>`.
    pub fn load(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if path.is_file() {
            return Self::parse_file(&std::fs::read_to_string(path)?);
        }
        Self::parse_spec(arg)
    }

    pub fn parse_file(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("").trim();
        let rows = || text.lines().skip(1).map(str::trim).filter(|l| !l.is_empty());
        let nums = |line: &str, k: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| usage(format!("bad number in {line:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != k {
                return Err(usage(format!("expected {k} columns in {line:?}")));
            }
            Ok(v)
        };
        match header {
            "t,value" => {
                let mut pts = rows().map(|l| nums(l, 2).map(|v| (v[0], v[1]))).collect::<Result<Vec<_>>>()?;
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                Ok(Self::Profile(pts))
            }
            "start,end,level" => {
                let cells = rows()
                    .map(|l| nums(l, 3).map(|v| (v[2], v[1] - v[0])))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Rearrangement(StepRearrangement::from_cells(cells)?))
            }
            "n,value" => {
                let v = rows().map(|l| nums(l, 2).map(|v| v[1])).collect::<Result<Vec<_>>>()?;
                Ok(Self::Sequence(SequenceData::from_values(&v)?))
            }
            _ => Ok(Self::Operator(CompactOperator::parse_csv(text)?)),
        }
    }

    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| usage(format!("{spec:?} is neither a file nor a spec string")))?;
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| usage(format!("bad number in {spec:?}: {e}"))))
                .collect()
        };
        match kind {
            "power" | "powerlog" => {
                let v = nums()?;
                let (g, d) = match v.as_slice() {
                    [g] if kind == "power" => (*g, 0.0),
                    [g, d] if kind == "powerlog" => (*g, *d),
                    _ => return Err(usage(format!("bad arguments in {spec:?}"))),
                };
                Ok(Self::PowerLog { g, d })
            }
            "step" => {
                let cells = args
                    .split(',')
                    .map(|c| {
                        let (l, w) = c.split_once('@').ok_or_else(|| usage(format!("expected level@width, got {c:?}")))?;
                        let p = |x: &str| x.trim().parse::<f64>().map_err(|e| usage(format!("bad number {x:?}: {e}")));
                        Ok((p(l)?, p(w)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::Rearrangement(StepRearrangement::from_cells(cells)?))
            }
            "seq" => match nums()?.as_slice() {
                [beta, len] if *len >= 1.0 => {
                    let v: Vec<f64> = (1..=*len as usize).map(|j| (j as f64).powf(-beta)).collect();
                    Ok(Self::Sequence(SequenceData::new(v)?))
                }
                _ => Err(usage(format!("expected seq:<beta>,<len>, got {spec:?}"))),
            },
            "volterra" => match nums()?.as_slice() {
                [n] if *n >= 1.0 => Ok(Self::Operator(CompactOperator::volterra(*n as usize)?)),
                _ => Err(usage(format!("expected volterra:<n>, got {spec:?}"))),
            },
            other => Err(usage(format!("unknown input kind {other:?}"))),
        }
    }

    /// The K-profile on `grid`: closed forms are evaluated, samples are
    /// interpolated in `(log t, log K)`, step functions give
    /// `K(t; L^1, L^inf) = int_0^t f*`.
    pub fn profile(&self, grid: &Arc<LogGrid>) -> Result<SampledFunction> {
        match self {
            Self::PowerLog { g, d } => {
                Ok(SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| t.powf(*g) * (1.0 - t.ln()).powf(*d))?)
            }
            Self::Profile(pts) => {
                let (lo, hi) = (pts.first().map_or(f64::NAN, |p| p.0), pts.last().map_or(f64::NAN, |p| p.0));
                if !(lo <= grid.t_min() * (1.0 + 1e-9) && hi >= 1.0 - 1e-12) {
                    return Err(usage(format!(
                        "profile samples cover [{lo:e}, {hi}], the grid needs [{:e}, 1]",
                        grid.t_min()
                    )));
                }
                Ok(SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| interpolate(pts, t))?)
            }
            Self::Rearrangement(f) => {
                let values = grid.nodes().iter().map(|&t| k_l1_linf(t, f)).collect::<realinterp::Result<_>>()?;
                Ok(SampledFunction::from_values(grid.clone(), values, Measure::Haar)?)
            }
            _ => Err(usage("this norm needs a function input (t,value or start,end,level)")),
        }
    }

    fn rearrangement(&self) -> Result<&StepRearrangement> {
        match self {
            Self::Rearrangement(f) => Ok(f),
            _ => Err(usage("this norm needs a decreasing step function (start,end,level)")),
        }
    }

    fn operator(&self) -> Result<&CompactOperator> {
        match self {
            Self::Operator(m) => Ok(m),
            _ => Err(usage("this norm needs an operator file")),
        }
    }
}

/// Piecewise-linear in `(log t, log v)` between samples (linear in `v`
/// where a value is zero).
fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 < t);
    if i == 0 {
        return pts[0].1;
    }
    if i == pts.len() {
        return pts[pts.len() - 1].1;
    }
    if pts[i].0 == t {
        return pts[i].1;
    }
    let ((t0, v0), (t1, v1)) = (pts[i - 1], pts[i]);
    if t1 == t0 {
        return v1;
    }
    let x = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
    if v0 > 0.0 && v1 > 0.0 {
        (v0.ln() + x * (v1.ln() - v0.ln())).exp()
    } else {
        v0 + x * (v1 - v0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub which: String,
    pub value: Sig6,
    pub divergent: bool,
    /// Value over the sampled range only, for divergent lattice norms.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truncated: Option<Sig6>,
}

impl NormValue {
    fn plain(which: &str, v: f64) -> Self {
        Self { which: which.into(), value: v.into(), divergent: !v.is_finite(), truncated: None }
    }

    fn lattice(which: &str, n: LatticeNorm) -> Self {
        Self {
            which: which.into(),
            value: n.value.into(),
            divergent: n.divergent,
            truncated: n.divergent.then(|| n.truncated_value.into()),
        }
    }
}

pub trait NormEvaluator: Send + Sync {
    fn eval(&self, input: &Input, grid: &Arc<LogGrid>) -> Result<NormValue>;
}

/// Name patterns accepted by [`evaluator_by_name`].
pub const NORM_NAMES: [&str; 9] = [
    "lattice:<L>",
    "knorm:<theta>,<q>",
    "extrap:<q>:<L>",
    "grand:<p>",
    "fk:<p>",
    "llogl:<alpha>",
    "lp:<p>",
    "schatten:<p>",
    "matsaev:<alpha>",
];

struct Named<F>(String, F);

impl<F> NormEvaluator for Named<F>
where
    F: Fn(&str, &Input, &Arc<LogGrid>) -> Result<NormValue> + Send + Sync,
{
    fn eval(&self, input: &Input, grid: &Arc<LogGrid>) -> Result<NormValue> {
        (self.1)(&self.0, input, grid)
    }
}

fn boxed<F>(which: &str, f: F) -> Box<dyn NormEvaluator>
where
    F: Fn(&str, &Input, &Arc<LogGrid>) -> Result<NormValue> + Send + Sync + 'static,
{
    Box::new(Named(which.to_string(), f))
}

fn number(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        x => x.parse().map_err(|e| usage(format!("bad number {x:?}: {e}"))),
    }
}

/// `<L>` is a lattice name (`F11`, `FK`, `L1`, `Linf`, `Linf(1/t)`) or a
/// lattice spec string.
pub fn evaluator_by_name(which: &str) -> Result<Box<dyn NormEvaluator>> {
    let (kind, arg) = which.split_once(':').unwrap_or((which, ""));
    let ev = match kind {
        "lattice" => {
            let (_, lat) = lattice_by_name(arg)?;
            boxed(which, move |w, input, grid| Ok(NormValue::lattice(w, lattice_norm(&input.profile(grid)?, &lat)?)))
        }
        "knorm" => {
            let (th, q) = arg.split_once(',').ok_or_else(|| usage("expected knorm:<theta>,<q>"))?;
            let p = ThetaQ::new(number(th)?, number(q)?).map_err(|e| usage(e.to_string()))?;
            boxed(which, move |w, input, grid| Ok(NormValue::lattice(w, lp_norm_k(&input.profile(grid)?, p, true, false)?)))
        }
        "extrap" => {
            let (q, l) = arg.split_once(':').ok_or_else(|| usage("expected extrap:<q>:<L>"))?;
            let q = if q == "log" { ExponentMap::LogE } else { ExponentMap::Fixed(number(q)?) };
            let (_, lat) = lattice_by_name(l)?;
            boxed(which, move |w, input, grid| Ok(NormValue::lattice(w, extrap_norm_k(&input.profile(grid)?, &lat, q)?)))
        }
        "grand" | "fk" => {
            let gp = GrandParams::new(number(arg)?, 1.0).map_err(|e| usage(e.to_string()))?;
            let fk = kind == "fk";
            boxed(which, move |w, input, grid| {
                let f = input.rearrangement()?;
                Ok(NormValue::plain(w, if fk { grand_norm_fk(f, &gp, grid) } else { grand_norm_def(f, &gp) }))
            })
        }
        "llogl" => {
            let alpha = number(arg)?;
            boxed(which, move |w, input, grid| {
                Ok(NormValue::lattice(w, llogl_alpha_norm(input.rearrangement()?, alpha, LogConvention::OnePlusLog, grid)?))
            })
        }
        "lp" => {
            let p = number(arg)?;
            boxed(which, move |w, input, _| match input {
                Input::Rearrangement(f) => Ok(NormValue::plain(w, f.lp_norm(p))),
                Input::Sequence(a) => Ok(NormValue::plain(w, a.lp_norm(p))),
                _ => Err(usage("lp needs a step function or a sequence")),
            })
        }
        "schatten" => {
            let p = number(arg)?;
            boxed(which, move |w, input, _| Ok(NormValue::plain(w, input.operator()?.schatten_norm(p)?)))
        }
        "matsaev" => {
            let alpha = number(arg)?;
            boxed(which, move |w, input, _| Ok(NormValue::plain(w, input.operator()?.matsaev_norm(alpha)?)))
        }
        _ => return Err(usage(format!("unknown norm {which:?}; known: {}", NORM_NAMES.join(", ")))),
    };
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<LogGrid> {
        LogGrid::new(1e-8, 32).unwrap()
    }

    #[test]
    fn lattice_norm_of_linear_profile() {
        // ||t||_{Linf(1/t)} = 1
        let v = evaluator_by_name("lattice:Linf(1/t)").unwrap().eval(&Input::parse_spec("power:1").unwrap(), &grid()).unwrap();
        assert_eq!(v.value.0, 1.0);
        assert!(!v.divergent);
    }

    #[test]
    fn step_input_gives_k_profile() {
        // f* = 1 on [0,1]: K = min(t,1), normalized K-norm 1
        let input = Input::parse_spec("step:1@1").unwrap();
        let v = evaluator_by_name("knorm:0.5,2").unwrap().eval(&input, &grid()).unwrap();
        assert!((v.value.0 - 1.0).abs() < 1e-6);
        let l = evaluator_by_name("llogl:1").unwrap().eval(&input, &grid()).unwrap();
        assert_eq!(l.value.0, 2.0);
    }

    #[test]
    fn sampled_profiles_are_interpolated() {
        let g = grid();
        let text: String = std::iter::once("t,value".to_string())
            .chain(g.nodes().iter().map(|t| format!("{t},{}", t.sqrt())))
            .collect::<Vec<_>>()
            .join("\n");
        let input = Input::parse_file(&text).unwrap();
        let direct = Input::parse_spec("power:0.5").unwrap();
        let ev = evaluator_by_name("lattice:F11").unwrap();
        assert_eq!(ev.eval(&input, &g).unwrap(), ev.eval(&direct, &g).unwrap());
        let coarse = LogGrid::new(1e-4, 8).unwrap();
        assert!(ev.eval(&input, &coarse).is_ok());
        let deep = LogGrid::new(1e-10, 8).unwrap();
        assert!(ev.eval(&input, &deep).is_err());
    }

    #[test]
    fn operators_and_unknown_names() {
        let v = Input::parse_spec("volterra:16").unwrap();
        let s = evaluator_by_name("schatten:inf").unwrap().eval(&v, &grid()).unwrap();
        assert!(s.value.0 > 0.5 && s.value.0 < 1.0);
        assert!(evaluator_by_name("sobolev:2").is_err());
        assert!(evaluator_by_name("schatten:1").unwrap().eval(&Input::parse_spec("power:1").unwrap(), &grid()).is_err());
    }
}

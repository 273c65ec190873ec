//! Power-log parameter lattices for the K-method, the substitution
//! operators acting on them, corpus estimates of operator norms, the
//! `w -> w~` transform and sequence lattices.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{argument, domain, Error, Result};
use crate::grid::{log_quadrature_ln, sup_limit_ln, tail_estimate, Domain, LogGrid, Measure, SampledFunction};
use crate::kfunctional::QuasiConcaveProfile;

/// `w(t) = t^{-a} (1 - log t)^{-b}` on `(0, 1]`; on `[1, inf)` the log
/// factor is `(1 + log t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLogWeight {
    pub a: f64,
    pub b: f64,
}

impl PowerLogWeight {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// `ln w` at log coordinate `u = |ln t|`.
    #[inline]
    pub fn ln_at_u(&self, u: f64, domain: Domain) -> f64 {
        let log_part = if self.b == 0.0 { 0.0 } else { -self.b * (1.0 + u).ln() };
        match domain {
            Domain::Unit => self.a * u + log_part,
            Domain::Upper => -self.a * u + log_part,
        }
    }

    pub fn eval(&self, t: f64, domain: Domain) -> f64 {
        self.ln_at_u(t.ln().abs(), domain).exp()
    }
}

/// Weighted `L^q(ds/s)` lattice (`q = inf` gives the weighted sup).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParam {
    pub weight: PowerLogWeight,
    pub q: f64,
    pub domain: Domain,
}

/// Lattice norm with divergence bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeNorm {
    /// `+inf` when divergent.
    pub value: f64,
    /// Value over the sampled range only, without the tail beyond the last
    /// node; what co-divergent comparisons use.
    pub truncated_value: f64,
    pub divergent: bool,
    /// Fitted power-decay rate of a divergent integrand; `None` when finite.
    pub divergence_rate: Option<f64>,
}

impl LatticeNorm {
    pub fn is_finite(&self) -> bool {
        !self.divergent
    }

    /// Logarithmic-type divergence (rate close to the harmonic one).
    pub fn is_mildly_divergent(&self) -> bool {
        matches!(self.divergence_rate, Some(r) if r > 0.5)
    }

    pub fn finite(value: f64) -> Self {
        Self { value, truncated_value: value, divergent: false, divergence_rate: None }
    }

    pub fn divergent() -> Self {
        Self { value: f64::INFINITY, truncated_value: f64::INFINITY, divergent: true, divergence_rate: Some(0.0) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { value: self.value * c, truncated_value: self.truncated_value * c, ..*self }
    }

    /// Norm of the disjoint union of the two supports in an `L^q` sense.
    pub fn combine(&self, other: &Self, q: f64) -> Self {
        let join = |a: f64, b: f64| {
            if q.is_infinite() {
                return a.max(b);
            }
            let m = a.max(b);
            if m == 0.0 || m.is_infinite() {
                return m;
            }
            m * ((a / m).powf(q) + (b / m).powf(q)).powf(1.0 / q)
        };
        let divergent = self.divergent || other.divergent;
        Self {
            value: if divergent { f64::INFINITY } else { join(self.value, other.value) },
            truncated_value: join(self.truncated_value, other.truncated_value),
            divergent,
            divergence_rate: match (self.divergence_rate, other.divergence_rate) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

impl LatticeParam {
    pub fn new(weight: PowerLogWeight, q: f64, domain: Domain) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(argument(format!("lattice exponent q must be >= 1, got {q}")));
        }
        if !weight.a.is_finite() || !weight.b.is_finite() {
            return Err(argument("weight exponents must be finite"));
        }
        Ok(Self { weight, q, domain })
    }

    fn unit(a: f64, b: f64, q: f64) -> Self {
        Self { weight: PowerLogWeight::new(a, b), q, domain: Domain::Unit }
    }

    /// `F_{b,q}`: weight `1 / (t (1 - log t)^b)`.
    pub fn f_bq(b: f64, q: f64) -> Self {
        Self::unit(1.0, b, q)
    }

    /// `G_{b,q}`: weight `1 / (1 - log t)^b`.
    pub fn g_bq(b: f64, q: f64) -> Self {
        Self::unit(0.0, b, q)
    }

    /// `L^inf(1/t)`.
    pub fn linf_inv_t() -> Self {
        Self::unit(1.0, 0.0, f64::INFINITY)
    }

    /// `L^inf`.
    pub fn linf() -> Self {
        Self::unit(0.0, 0.0, f64::INFINITY)
    }

    /// `L^1(ds/s)`.
    pub fn l1_haar() -> Self {
        Self::unit(0.0, 0.0, 1.0)
    }

    /// `L^inf(t^{-1} (1 - log t)^{-1/p})`.
    pub fn fk(p: f64) -> Self {
        Self::unit(1.0, 1.0 / p, f64::INFINITY)
    }

    /// Koethe dual for the pairing `int f g ds`: weight `t / w`, conjugate
    /// exponent.
    pub fn dual(&self) -> Self {
        let q = if self.q == 1.0 {
            f64::INFINITY
        } else if self.q.is_infinite() {
            1.0
        } else {
            self.q / (self.q - 1.0)
        };
        Self {
            weight: PowerLogWeight::new(-1.0 - self.weight.a, -self.weight.b),
            q,
            domain: self.domain,
        }
    }

    /// Parses `"t^-a*(1-ln t)^-b; q=Q; domain=(0,1]"`. Either weight
    /// factor may be omitted (`"1"` is the unit weight); `q=inf` and
    /// `domain=[1,inf)` are accepted.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split(';').map(str::trim);
        let weight = parse_weight(parts.next().unwrap_or(""))?;
        let mut q = None;
        let mut dom = Domain::Unit;
        for part in parts.filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            match key.trim() {
                "q" => q = Some(parse_exponent(value.trim())?),
                "domain" => {
                    dom = match value.replace(' ', "").as_str() {
                        "(0,1]" => Domain::Unit,
                        "[1,inf)" | "[1,infinity)" | "[1,∞)" => Domain::Upper,
                        other => return Err(Error::Parse(format!("unknown domain {other:?}"))),
                    }
                }
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let q = q.ok_or_else(|| Error::Parse("missing q=".into()))?;
        Self::new(weight, q, dom)
    }

    /// `(||t||_F, C)` with `C = e / ||chi_[1/e, 1]||_F`: the first is the
    /// norm of the embedding `L^inf(1/t) -> F`, the second bounds `sup f`
    /// by `C ||f||_F` for quasi-concave `f` on the unit domain.
    pub fn embedding_constants(&self, grid: &Arc<LogGrid>) -> (f64, f64) {
        let t = SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| t).expect("t is admissible");
        let chi = SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| {
            if t >= (-1.0f64).exp() - 1e-15 { 1.0 } else { 0.0 }
        })
        .expect("indicator is admissible");
        let c1 = lattice_norm(&t, self).map(|n| n.value).unwrap_or(f64::INFINITY);
        let c2 = lattice_norm(&chi, self)
            .map(|n| std::f64::consts::E / n.value)
            .unwrap_or(f64::INFINITY);
        (c1, c2)
    }
}

fn parse_exponent(s: &str) -> Result<f64> {
    match s {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}"))),
    }
}

fn parse_weight(s: &str) -> Result<PowerLogWeight> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (mut a, mut b) = (0.0, 0.0);
    if compact.is_empty() || compact == "1" {
        return Ok(PowerLogWeight::new(a, b));
    }
    for factor in compact.split('*') {
        if let Some(exp) = factor.strip_prefix("t^") {
            a = -parse_exponent(exp.trim_start_matches('(').trim_end_matches(')'))?;
        } else if let Some(exp) = factor
            .strip_prefix("(1-lnt)^")
            .or_else(|| factor.strip_prefix("(1-logt)^"))
            .or_else(|| factor.strip_prefix("(1+lnt)^"))
        {
            b = -parse_exponent(exp.trim_start_matches('(').trim_end_matches(')'))?;
        } else if factor == "t" {
            a = -1.0;
        } else {
            return Err(Error::Parse(format!("unrecognized weight factor {factor:?}")));
        }
    }
    Ok(PowerLogWeight::new(a, b))
}

fn fmt_exponent(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for LatticeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dom = match self.domain {
            Domain::Unit => "(0,1]",
            Domain::Upper => "[1,inf)",
        };
        let log = match self.domain {
            Domain::Unit => "(1-ln t)",
            Domain::Upper => "(1+ln t)",
        };
        write!(
            f,
            "t^{}*{}^{}; q={}; domain={}",
            -self.weight.a + 0.0,
            log,
            -self.weight.b + 0.0,
            fmt_exponent(self.q),
            dom
        )
    }
}

/// `||f||_F`. Divergent integrals (or a weighted sup still growing at the
/// end of the grid) give `+inf` with the divergence flag set.
pub fn lattice_norm(f: &SampledFunction, lattice: &LatticeParam) -> Result<LatticeNorm> {
    if f.domain() != lattice.domain {
        return Err(argument("function and lattice live on different domains"));
    }
    let grid = f.grid();
    let h = grid.h();
    let ln_fw: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| v.ln() + lattice.weight.ln_at_u(grid.u(k), lattice.domain))
        .collect();
    weighted_norm_ln(&ln_fw, lattice.q, h)
}

/// q-mean over `du` (or sup) of `exp(ln_g)` on a uniform grid of step `h`.
pub(crate) fn weighted_norm_ln(ln_g: &[f64], q: f64, h: f64) -> Result<LatticeNorm> {
    if q.is_infinite() {
        let (arg, max) = ln_g
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &l)| if l > acc.1 { (k, l) } else { acc });
        let n = ln_g.len() - 1;
        let growing = arg == n && n > 0 && ln_g[n] > ln_g[n - 1] + 1e-12;
        let value = max.exp();
        if !growing {
            return Ok(LatticeNorm::finite(value));
        }
        return Ok(match sup_limit_ln(ln_g.len(), h, |k| ln_g[k]) {
            Some(l) => LatticeNorm { value: l.exp(), truncated_value: value, divergent: false, divergence_rate: None },
            None => LatticeNorm { value: f64::INFINITY, truncated_value: value, divergent: true, divergence_rate: Some(0.0) },
        });
    }
    // scale by the maximum to avoid overflow in the q-th power
    let top = ln_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(LatticeNorm { value: 0.0, truncated_value: 0.0, divergent: false, divergence_rate: None });
    }
    let scaled: Vec<f64> = ln_g.iter().map(|l| q * (l - top)).collect();
    let integral = log_quadrature_ln(&scaled, h);
    let scale = top.exp();
    let truncated_value = scale * integral.value.max(0.0).powf(1.0 / q);
    Ok(LatticeNorm {
        value: if integral.is_divergent() { f64::INFINITY } else { scale * integral.total().powf(1.0 / q) },
        truncated_value,
        divergent: integral.is_divergent(),
        divergence_rate: integral.divergence,
    })
}

/// Substitution operator acting on sampled functions.
pub trait SubstitutionOp: Send + Sync {
    fn name(&self) -> String;
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction>;
}

fn require_unit(f: &SampledFunction) -> Result<()> {
    if f.domain() == Domain::Unit {
        Ok(())
    } else {
        Err(argument("substitution operators act on functions on (0,1]"))
    }
}

/// `Tf(t) = f(t^2) / t`, defined on the nodes with `2k <= N`.
pub fn apply_t(f: &SampledFunction) -> Result<SampledFunction> {
    require_unit(f)?;
    let grid = f.grid();
    let half = grid.last_index() / 2;
    let out = grid.truncated(half);
    let values = (0..=half).map(|k| f.values()[2 * k] / grid.node(k)).collect();
    SampledFunction::from_values(out, values, f.measure())
}

/// `Rf(t) = f(sqrt t)`; odd nodes use the log-linear interpolant.
pub fn apply_r(f: &SampledFunction) -> Result<SampledFunction> {
    require_unit(f)?;
    let values = (0..f.grid().len())
        .map(|k| if k % 2 == 0 { f.values()[k / 2] } else { f.at_position(k as f64 / 2.0) })
        .collect();
    SampledFunction::from_values(f.grid().clone(), values, f.measure())
}

fn substitute(f: &SampledFunction, r: f64, prefactor: impl Fn(f64) -> f64) -> Result<SampledFunction> {
    let grid = f.grid();
    let last = ((grid.last_index() as f64) / r + 1e-9).floor() as usize;
    let last = last.min(grid.last_index());
    let out = grid.truncated(last);
    let values = (0..=last)
        .map(|k| {
            let x = r * k as f64;
            let xr = x.round();
            let v = if (x - xr).abs() < 1e-9 { f.values()[xr as usize] } else { f.at_position(x) };
            prefactor(grid.node(k)) * v
        })
        .collect();
    SampledFunction::from_values(out, values, f.measure())
}

/// `S_r f(t) = f(t^r)`.
pub fn apply_s(f: &SampledFunction, r: f64) -> Result<SampledFunction> {
    require_unit(f)?;
    if !(r > 0.0) {
        return Err(argument(format!("S_r needs r > 0, got {r}")));
    }
    substitute(f, r, |_| 1.0)
}

/// `Q_r f(s) = s^{1/r - 1} f(s^{1/r})`.
pub fn apply_q(f: &SampledFunction, r: f64) -> Result<SampledFunction> {
    require_unit(f)?;
    if !(r > 1.0) {
        return Err(argument(format!("Q_r needs r > 1, got {r}")));
    }
    let e = 1.0 / r - 1.0;
    substitute(f, 1.0 / r, |s| s.powf(e))
}

struct OpT;
struct OpR;
struct OpS(f64);
struct OpQ(f64);

impl SubstitutionOp for OpT {
    fn name(&self) -> String {
        "T".into()
    }
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        apply_t(f)
    }
}

impl SubstitutionOp for OpR {
    fn name(&self) -> String {
        "R".into()
    }
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        apply_r(f)
    }
}

impl SubstitutionOp for OpS {
    fn name(&self) -> String {
        format!("S:{}", self.0)
    }
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        apply_s(f, self.0)
    }
}

impl SubstitutionOp for OpQ {
    fn name(&self) -> String {
        format!("Q:{}", self.0)
    }
    fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        apply_q(f, self.0)
    }
}

/// Operator names understood by [`operator_by_name`].
pub const OPERATOR_NAMES: [&str; 4] = ["T", "R", "S:<r>", "Q:<r>"];

/// Looks up `"T"`, `"R"`, `"S:<r>"` or `"Q:<r>"`.
pub fn operator_by_name(name: &str) -> Result<Box<dyn SubstitutionOp>> {
    let param = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Parse(format!("bad operator parameter {s:?}: {e}")))
    };
    match name.split_once(':') {
        None if name == "T" => Ok(Box::new(OpT)),
        None if name == "R" => Ok(Box::new(OpR)),
        Some(("S", r)) => {
            let r = param(r)?;
            if !(r > 0.0) {
                return Err(argument("S_r needs r > 0"));
            }
            Ok(Box::new(OpS(r)))
        }
        Some(("Q", r)) => {
            let r = param(r)?;
            if !(r > 1.0) {
                return Err(argument("Q_r needs r > 1"));
            }
            Ok(Box::new(OpQ(r)))
        }
        _ => Err(argument(format!("unknown operator {name:?}; known: {}", OPERATOR_NAMES.join(", ")))),
    }
}

/// Corpus lower bound for an operator norm.
#[derive(Debug, Clone, PartialEq)]
pub struct OpNormEstimate {
    pub value: f64,
    /// Name of the corpus member attaining the maximum.
    pub argmax: Option<String>,
    pub used: usize,
    pub skipped: usize,
}

/// `max ||op f||_F / ||f||_F` over the F-finite nonzero corpus members.
pub fn estimate_op_norm(
    op: &dyn SubstitutionOp,
    lattice: &LatticeParam,
    corpus: &[(String, SampledFunction)],
) -> Result<OpNormEstimate> {
    let mut best = OpNormEstimate { value: 0.0, argmax: None, used: 0, skipped: 0 };
    for (name, f) in corpus {
        let nf = lattice_norm(f, lattice)?;
        if nf.divergent || nf.value == 0.0 {
            best.skipped += 1;
            continue;
        }
        let g = op.apply(f)?;
        let ng = lattice_norm(&g, lattice)?;
        best.used += 1;
        let ratio = ng.value / nf.value;
        if ratio > best.value || best.argmax.is_none() {
            best.value = ratio;
            best.argmax = Some(name.clone());
        }
    }
    if best.used == 0 {
        return Err(domain(format!("no corpus member has finite nonzero {}-norm", lattice)));
    }
    Ok(best)
}

/// Corpus member that can be resampled on any grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `t^g (1 - log t)^d`.
    PowerLog { g: f64, d: i32 },
    Concave(QuasiConcaveProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedProfile {
    pub name: String,
    pub shape: ProfileShape,
}

impl NamedProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.shape {
            ProfileShape::PowerLog { g, d } => t.powf(*g) * (1.0 - t.ln()).powi(*d),
            ProfileShape::Concave(p) => p.eval(t),
        }
    }

    pub fn sample(&self, grid: &Arc<LogGrid>) -> SampledFunction {
        match &self.shape {
            ProfileShape::Concave(p) => p.sample(grid),
            ProfileShape::PowerLog { .. } => SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| self.eval(t))
                .expect("power-log functions are admissible"),
        }
    }

    /// Nondecreasing with `K(t)/t` nonincreasing on the grid, i.e. usable
    /// as a K-functional.
    pub fn is_k_profile(&self, grid: &LogGrid) -> bool {
        let ts: Vec<f64> = grid.nodes().iter().rev().copied().collect();
        let ks: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        crate::kfunctional::check_quasi_concave(&ts, &ks, 1e-10).is_ok()
    }
}

/// `t^g (1 - log t)^d` for `g in {0, 1/2, 1}`, `d in {-2..2}` plus
/// `random` piecewise-linear concave profiles drawn from `seed`.
pub fn profile_corpus(random: usize, seed: u64, t_min: f64) -> Vec<NamedProfile> {
    use rand::SeedableRng;
    let mut out = Vec::new();
    for g in [0.0, 0.5, 1.0] {
        for d in -2..=2 {
            out.push(NamedProfile { name: format!("t^{g}*(1-ln t)^{d}"), shape: ProfileShape::PowerLog { g, d } });
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random {
        let p = random_concave_profile(&mut rng, t_min);
        out.push(NamedProfile { name: format!("conv0#{i}"), shape: ProfileShape::Concave(p) });
    }
    out
}

/// [`profile_corpus`] sampled on `grid`.
pub fn canonical_corpus(grid: &Arc<LogGrid>, random: usize, seed: u64) -> Vec<(String, SampledFunction)> {
    profile_corpus(random, seed, grid.t_min())
        .into_iter()
        .map(|p| {
            let f = p.sample(grid);
            (p.name, f)
        })
        .collect()
}

/// Concave piecewise-linear profile with 2 to 16 breakpoints spread
/// log-uniformly over `[t_min^{3/4}, 1]`, sorted random slopes and
/// `K(1) = 1`. Keeping the kinks a few octaves above `t_min` leaves the
/// deep end linear, where the quadrature tail model is exact.
pub fn random_concave_profile<R: Rng>(rng: &mut R, t_min: f64) -> QuasiConcaveProfile {
    let m = rng.random_range(2..=16usize);
    let lo = 0.75 * t_min.ln();
    let mut ts: Vec<f64> = (0..m - 1).map(|_| rng.random_range(lo..0.0).exp()).collect();
    ts.push(1.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut slopes: Vec<f64> = (0..ts.len()).map(|_| rng.random_range(-2.0f64..10.0).exp()).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut vals = Vec::with_capacity(ts.len());
    let (mut prev_t, mut acc) = (0.0, 0.0);
    for (t, s) in ts.iter().zip(&slopes) {
        acc += s * (t - prev_t);
        vals.push(acc);
        prev_t = *t;
    }
    let k1 = acc;
    vals.iter_mut().for_each(|v| *v /= k1);
    QuasiConcaveProfile::new(ts, vals).expect("sorted slopes give a concave profile")
}

/// `w~(t) = int_0^1 min(1, s/t) w(s) ds/s` at every node, i.e.
/// `t^{-1} int_0^t w ds + int_t^1 w ds/s`.
pub fn tilde_weight(w: &SampledFunction) -> Result<SampledFunction> {
    if w.domain() != Domain::Unit {
        return Err(argument("w~ is computed on (0,1]"));
    }
    let grid = w.grid();
    let h = grid.h();
    let n = grid.last_index();
    let vals = w.values();
    let lin: Vec<f64> = vals.iter().zip(grid.nodes()).map(|(v, t)| v * t).collect();
    let (tail, divergence) = tail_estimate(&lin, h);
    if divergence.is_some() {
        return Err(domain("int_0^t w(s) ds diverges"));
    }
    // below[k] = int_0^{t_k} w ds, above[k] = int_{t_k}^1 w ds/s
    let mut below = vec![0.0; n + 1];
    below[n] = tail;
    for k in (0..n).rev() {
        below[k] = below[k + 1] + crate::grid::cell_integral(lin[k], lin[k + 1], h);
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut above = 0.0;
    for k in 0..=n {
        if k > 0 {
            above += crate::grid::cell_integral(vals[k - 1], vals[k], h);
        }
        out.push(below[k] / grid.node(k) + above);
    }
    SampledFunction::from_values(grid.clone(), out, Measure::Haar)
}

/// Sequence lattice `G_d`: `||xi||` is the norm of `sum xi_n chi_[n,n+1)`
/// in the lattice on `[1, inf)` with weight `s^{-a} (1 + log s)^{-b}` and
/// exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqLattice {
    pub a: f64,
    pub b: f64,
    pub q: f64,
}

impl SeqLattice {
    /// `sup_n xi_n / log^alpha(e n)`.
    pub fn matsaev(alpha: f64) -> Self {
        Self { a: 0.0, b: alpha, q: f64::INFINITY }
    }

    fn weight(&self, s: f64) -> f64 {
        s.powf(-self.a) * (1.0 + s.ln()).powf(-self.b)
    }

    /// `int_n^{n+1} w^q ds/s` (Gauss-Legendre in `log s`).
    fn cell_mass(&self, n: usize) -> f64 {
        const X: [f64; 4] = [-0.861_136_311_594_053, -0.339_981_043_584_856, 0.339_981_043_584_856, 0.861_136_311_594_053];
        const W: [f64; 4] = [0.347_854_845_137_454, 0.652_145_154_862_546, 0.652_145_154_862_546, 0.347_854_845_137_454];
        let (l0, l1) = ((n as f64).ln(), ((n + 1) as f64).ln());
        let (mid, half) = (0.5 * (l0 + l1), 0.5 * (l1 - l0));
        X.iter()
            .zip(W)
            .map(|(x, w)| w * half * self.weight((mid + half * x).exp()).powf(self.q))
            .sum()
    }

    /// Norm of `xi_1, ..., xi_N` (`xi[0]` is `xi_1`), zero afterwards.
    /// Weights are assumed nonincreasing so the sup form reads `xi_n w(n)`.
    pub fn norm(&self, xi: &[f64]) -> f64 {
        if self.q.is_infinite() {
            return xi
                .iter()
                .enumerate()
                .map(|(i, x)| x.abs() * self.weight((i + 1) as f64))
                .fold(0.0, f64::max);
        }
        let s: f64 = xi
            .iter()
            .enumerate()
            .map(|(i, x)| x.abs().powf(self.q) * self.cell_mass(i + 1))
            .sum();
        s.powf(1.0 / self.q)
    }

    /// Same norm on a sparse set of indices `ns` (1-based, increasing) for
    /// a sequence that is evaluated only there; sup form only.
    pub fn sup_on(&self, ns: &[usize], xi: &[f64]) -> f64 {
        ns.iter().zip(xi).map(|(&n, x)| x.abs() * self.weight(n as f64)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<LogGrid> {
        LogGrid::default_grid()
    }

    fn sample(f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction::from_fn(grid(), Measure::Haar, f).unwrap()
    }

    #[test]
    fn norm_examples() {
        let t = sample(|t| t);
        let n = lattice_norm(&t, &LatticeParam::linf_inv_t()).unwrap();
        assert_eq!(n.value, 1.0);
        let n = lattice_norm(&t, &LatticeParam::l1_haar()).unwrap();
        assert!((n.value - 1.0).abs() < 1e-12);
        let n = lattice_norm(&t, &LatticeParam::f_bq(1.0, 1.0)).unwrap();
        assert!(n.divergent && n.value.is_infinite() && n.is_mildly_divergent());
        let n = lattice_norm(&sample(|_| 1.0), &LatticeParam::linf_inv_t()).unwrap();
        assert!(n.divergent);
        let n = lattice_norm(&t, &LatticeParam::f_bq(1.0, 2.0)).unwrap();
        // int_0^inf (1+u)^{-2} du = 1
        assert!((n.value - 1.0).abs() < 1e-4, "{}", n.value);
    }

    #[test]
    fn parse_round_trip() {
        let p = LatticeParam::parse("t^-1*(1-ln t)^-0.5; q=inf; domain=(0,1]").unwrap();
        assert_eq!(p, LatticeParam::fk(2.0));
        assert_eq!(LatticeParam::parse(&p.to_string()).unwrap(), p);
        let g = LatticeParam::parse("(1-ln t)^-2; q=1").unwrap();
        assert_eq!(g, LatticeParam::g_bq(2.0, 1.0));
        let u = LatticeParam::parse("1; q=2; domain=[1,inf)").unwrap();
        assert_eq!(u.domain, Domain::Upper);
        assert!(LatticeParam::parse("t^-1; q=0.5").is_err());
        assert!(LatticeParam::parse("sin(t); q=1").is_err());
    }

    #[test]
    fn t_examples() {
        let g = grid();
        let t = apply_t(&sample(|t| t)).unwrap();
        for (k, v) in t.values().iter().enumerate() {
            assert!((v - g.node(k)).abs() <= 1e-15 * g.node(k).max(1e-300) + 1e-300);
        }
        let one = apply_t(&sample(|_| 1.0)).unwrap();
        for (k, v) in one.values().iter().enumerate() {
            assert!((v * g.node(k) - 1.0).abs() < 1e-12);
        }
        let f = sample(|t| t * (1.0 - t.ln()));
        let tf = apply_t(&f).unwrap();
        for (k, v) in tf.values().iter().enumerate() {
            let t = g.node(k);
            let want = t * (1.0 - 2.0 * t.ln());
            assert!((v - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn s2_is_t_times_t() {
        let f = sample(|t| t.sqrt() * (1.0 - t.ln()));
        let s2 = apply_s(&f, 2.0).unwrap();
        let tf = apply_t(&f).unwrap();
        let g = grid();
        for k in 0..tf.values().len() {
            assert_eq!(s2.values()[k], f.values()[2 * k]);
            assert!((g.node(k) * tf.values()[k] - s2.values()[k]).abs() <= 1e-15 * s2.values()[k]);
        }
    }

    #[test]
    fn r_s_q_examples() {
        let g = grid();
        let r = apply_r(&sample(|_| 3.0)).unwrap();
        assert!(r.values().iter().all(|&v| v == 3.0));
        let f = sample(|t| t);
        let rf = apply_r(&f).unwrap();
        for k in (0..g.len()).step_by(2) {
            assert_eq!(rf.values()[k], g.node(k / 2));
        }
        let rr = apply_r(&rf).unwrap();
        let s = apply_s(&f, 0.25).unwrap();
        for k in (0..g.len()).step_by(4) {
            assert_eq!(rr.values()[k], s.values()[k]);
            assert!((s.values()[k] - g.node(k).powf(0.25)).abs() < 1e-12);
        }
        let s1 = apply_s(&f, 1.0).unwrap();
        assert_eq!(s1.values(), f.values());
        let l = sample(|t| 1.0 - t.ln());
        let s2 = apply_s(&l, 2.0).unwrap();
        for k in 0..s2.values().len() {
            assert!((s2.values()[k] - (1.0 - 2.0 * g.node(k).ln())).abs() < 1e-12);
        }
        assert!(apply_s(&f, 0.0).is_err());
        assert!(apply_q(&f, 1.0).is_err());
    }

    #[test]
    fn q2_identity() {
        use crate::grid::StepRearrangement;
        let g = grid();
        let one = SampledFunction::from_fn(g.clone(), Measure::Lebesgue, |_| 1.0).unwrap();
        let q = apply_q(&one, 2.0).unwrap();
        for k in 0..g.len() {
            assert!((q.values()[k] - g.node(k).powf(-0.5)).abs() < 1e-9 * q.values()[k]);
        }
        // s^{-1/2} is already decreasing; its primitive is 2 sqrt(t)
        let r = StepRearrangement::from_primitive(&g, |t| 2.0 * t.sqrt()).unwrap();
        for k in (0..g.len()).step_by(97) {
            let t = g.node(k);
            assert!((r.integral_to(t) - 2.0 * t.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_registry() {
        let f = sample(|t| t.sqrt());
        for name in ["T", "R", "S:2", "Q:3"] {
            let op = operator_by_name(name).unwrap();
            assert_eq!(op.name(), name);
            op.apply(&f).unwrap();
        }
        assert!(operator_by_name("S:-1").is_err());
        assert!(operator_by_name("X").is_err());
    }

    #[test]
    fn t_norm_on_linf_inv_t_is_one() {
        let corpus = canonical_corpus(&grid(), 100, 1);
        let est = estimate_op_norm(&*operator_by_name("T").unwrap(), &LatticeParam::linf_inv_t(), &corpus).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn t_norm_on_f_b1() {
        let corpus = canonical_corpus(&grid(), 100, 1);
        for b in [1.0, 2.0] {
            let est = estimate_op_norm(&*operator_by_name("T").unwrap(), &LatticeParam::f_bq(b, 1.0), &corpus).unwrap();
            assert!(est.value <= 2f64.powf(b - 1.0) + 1e-6, "b={b} {est:?}");
        }
    }

    #[test]
    fn tilde_weight_examples() {
        let g = grid();
        let wt = tilde_weight(&sample(|_| 1.0)).unwrap();
        let err = (0..g.len())
            .map(|k| (wt.values()[k] - (1.0 + g.u(k))) / (1.0 + g.u(k)))
            .fold(0.0f64, |m, e| m.max(e.abs()));
        assert!(err <= 1e-6, "{err}");

        let w1 = tilde_weight(&sample(|t| 1.0 - t.ln())).unwrap();
        for k in 0..g.len() {
            let l = 1.0 + g.u(k);
            let r = w1.values()[k] / (l * l);
            assert!((0.25..=4.0).contains(&r));
            // closed form 2 + 2u + u^2/2 up to the truncated range
            let u = g.u(k);
            assert!((w1.values()[k] - (2.0 + 2.0 * u + 0.5 * u * u)).abs() < 1e-4 * l * l);
        }
        for w in w1.values().windows(2) {
            assert!(w[1] >= w[0]);
        }

        // bump of mass m in ds/s around s0, against a fine Simpson oracle
        let (s0, width, m) = (1e-3f64, 0.2f64, 2.0);
        let profile = |x: f64| if x.abs() < 1.0 { m * 0.75 * (1.0 - x * x) } else { 0.0 };
        let bump = sample(|s| profile((s.ln() - s0.ln()) / width) / width);
        let wb = tilde_weight(&bump).unwrap();
        let oracle = |t: f64| {
            let n = 20_000;
            let step = 2.0 / n as f64;
            (0..=n)
                .map(|i| {
                    let x = -1.0 + i as f64 * step;
                    let c = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    c * profile(x) * (s0 * (width * x).exp() / t).min(1.0)
                })
                .sum::<f64>()
                * step
                / 3.0
        };
        for &t in &[1e-8, 1e-6, 1e-3, 1e-1, 1.0] {
            let k = g.position(t).round() as usize;
            let want = oracle(g.node(k));
            assert!((wb.values()[k] - want).abs() < 2e-3 * want, "t={t} {} {want}", wb.values()[k]);
            let crude = m * (s0 / g.node(k)).min(1.0);
            assert!((wb.values()[k] - crude).abs() < 0.05 * crude);
        }
    }

    #[test]
    fn seq_lattice_matsaev() {
        let l = SeqLattice::matsaev(1.0);
        assert_eq!(l.norm(&[1.0, 1.0, 1.0]), 1.0);
        let ones = SeqLattice { a: 0.0, b: 0.0, q: 1.0 };
        // int_1^3 ds/s
        assert!((ones.norm(&[1.0, 1.0]) - 3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn dual_weight() {
        let d = LatticeParam::g_bq(1.0, 2.0).dual();
        assert_eq!(d.weight, PowerLogWeight::new(-1.0, -1.0));
        assert_eq!(d.q, 2.0);
        assert_eq!(LatticeParam::l1_haar().dual().q, f64::INFINITY);
    }
}

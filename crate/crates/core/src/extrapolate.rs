//! Extrapolation side: the parameter maps `theta(t)`, `xi(t)`, `eta(t)`,
//! `q(t)`, `p(n)`, the functional `|| t ||a||_{theta(t),q} ||_F`, its
//! sequence-space analogue and the reiteration windows.

use std::sync::Arc;

use crate::error::{argument, domain, Result};
use crate::grid::{log_quadrature_by, sup_limit_ln, Domain, LogGrid, Measure, SampledFunction, StepRearrangement};
use crate::interpnorm::ThetaQ;
use crate::kfunctional::{k_discrete_interp, k_lp_linf, SequenceData};
use crate::lattice::{lattice_norm, LatticeNorm, LatticeParam, NamedProfile, SeqLattice};

/// `1 / (2 sqrt e)`: pointwise floor of `t ||a||_{theta(t),q} / K(t)`.
pub const BASAUX_FLOOR: f64 = 0.303_265_329_856_316_7;

/// Scalar parameter maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMap {
    /// `1 + 1 / (2 log(t/e))` on `(0, 1]`.
    Theta,
    /// `1 / (2 log(e/t))` on `(0, 1]`.
    Xi,
    /// `1 / (2 log(e t))` on `[1, inf)`.
    Eta,
    /// `2 log(e/t)` on `(0, 1]`.
    QOfT,
    /// `2 log(e n) / (2 log(e n) - 1)` on `[1, inf)`.
    POfN,
}

impl ThetaMap {
    pub fn eval(self, x: f64) -> Result<f64> {
        let unit = |x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(1.0 - x.ln())
            } else {
                Err(argument(format!("{self:?} is defined on (0,1], got {x}")))
            }
        };
        let upper = |x: f64| {
            if x >= 1.0 && x.is_finite() {
                Ok(1.0 + x.ln())
            } else {
                Err(argument(format!("{self:?} is defined on [1,inf), got {x}")))
            }
        };
        Ok(match self {
            Self::Theta => 1.0 - 0.5 / unit(x)?,
            Self::Xi => 0.5 / unit(x)?,
            Self::Eta => 0.5 / upper(x)?,
            Self::QOfT => 2.0 * unit(x)?,
            Self::POfN => {
                let l = 2.0 * upper(x)?;
                l / (l - 1.0)
            }
        })
    }
}

pub fn theta_of_t(t: f64) -> Result<f64> {
    ThetaMap::Theta.eval(t)
}

pub fn xi_of_t(t: f64) -> Result<f64> {
    ThetaMap::Xi.eval(t)
}

pub fn eta_of_t(t: f64) -> Result<f64> {
    ThetaMap::Eta.eval(t)
}

pub fn q_of_t(t: f64) -> Result<f64> {
    ThetaMap::QOfT.eval(t)
}

pub fn p_of_n(n: f64) -> Result<f64> {
    ThetaMap::POfN.eval(n)
}

/// Exponent used for the inner norms at each node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExponentMap {
    Fixed(f64),
    /// `q(t) = 2 log(e/t)`.
    LogE,
}

impl ExponentMap {
    fn at_u(self, u: f64) -> f64 {
        match self {
            Self::Fixed(q) => q,
            Self::LogE => 2.0 * (1.0 + u),
        }
    }
}

/// `g(t) = t ||a||_{<A>_{theta(t),q}^{K, normalized}}` at every node;
/// `+inf` where the inner norm diverges.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapProfile {
    grid: Arc<LogGrid>,
    values: Vec<f64>,
}

/// Inner restricted normalized norm of `exp(lnk)` at `(theta, q)`.
fn inner_norm(lnk: &[f64], u: &[f64], h: f64, theta: f64, q: f64) -> f64 {
    let n = lnk.len() - 1;
    let at = |k: usize| theta * u[k] + lnk[k];
    let mut top = f64::NEG_INFINITY;
    let mut arg = 0;
    for k in 0..=n {
        let v = at(k);
        if v > top {
            top = v;
            arg = k;
        }
    }
    if top == f64::NEG_INFINITY {
        return 0.0;
    }
    if q.is_infinite() {
        if arg == n && n > 0 && at(n) > at(n - 1) + 1e-12 {
            return sup_limit_ln(n + 1, h, at).map_or(f64::INFINITY, f64::exp);
        }
        return top.exp();
    }
    let integral = log_quadrature_by(n + 1, h, |k| q * (at(k) - top));
    if integral.is_divergent() {
        return f64::INFINITY;
    }
    let c = (q * theta * (1.0 - theta)).powf(1.0 / q);
    c * top.exp() * integral.total().powf(1.0 / q)
}

impl ExtrapProfile {
    /// `k` is a K-profile sampled on `(0, 1]`. Costs `O(N^2)`.
    pub fn new(k: &SampledFunction, q: ExponentMap) -> Result<Self> {
        if k.domain() != Domain::Unit {
            return Err(argument("extrapolation profiles live on (0,1]"));
        }
        if let ExponentMap::Fixed(q) = q {
            ThetaQ::new(0.5, q)?;
        }
        let grid = k.grid().clone();
        let h = grid.h();
        let u: Vec<f64> = (0..grid.len()).map(|j| grid.u(j)).collect();
        let lnk: Vec<f64> = k.values().iter().map(|v| v.ln()).collect();
        let values = u
            .iter()
            .zip(grid.nodes())
            .map(|(&uj, &t)| {
                let theta = 1.0 - 0.5 / (1.0 + uj);
                t * inner_norm(&lnk, &u, h, theta, q.at_u(uj))
            })
            .collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Some inner norm is infinite.
    pub fn pointwise_infinite(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }

    pub fn function(&self) -> Option<SampledFunction> {
        if self.pointwise_infinite() {
            return None;
        }
        SampledFunction::from_values(self.grid.clone(), self.values.clone(), Measure::Haar).ok()
    }

    /// `||g||_F`; `+inf` (rate 0) when `g` is infinite somewhere.
    pub fn norm(&self, lattice: &LatticeParam) -> Result<LatticeNorm> {
        match self.function() {
            Some(g) => lattice_norm(&g, lattice),
            None => Ok(LatticeNorm::divergent()),
        }
    }

    /// `min_k (g(t_k) - K(t_k) / (2 sqrt e))` and the number of nodes where
    /// this falls below `-slack`.
    pub fn floor_margin(&self, k: &SampledFunction, slack: f64) -> (f64, usize) {
        let mut worst = f64::INFINITY;
        let mut bad = 0;
        for (g, kv) in self.values.iter().zip(k.values()) {
            let m = g - BASAUX_FLOOR * kv;
            worst = worst.min(m);
            if m < -slack {
                bad += 1;
            }
        }
        (worst, bad)
    }

    /// `(||g chi_(0,1)||_F, ||g chi_(0,1/e)||_F, 1 + (4/3) C1 C2 e)` with
    /// `C1`, `C2` the measured embedding constants of `F`.
    pub fn splitting(&self, lattice: &LatticeParam) -> Result<(LatticeNorm, LatticeNorm, f64)> {
        let whole = self.norm(lattice)?;
        let cut = (-1.0f64).exp();
        let low = match self.function() {
            Some(g) => lattice_norm(&g.map(|t, v| if t < cut { v } else { 0.0 })?, lattice)?,
            None => LatticeNorm::divergent(),
        };
        let (c1, c2) = lattice.embedding_constants(&self.grid);
        Ok((whole, low, 1.0 + 4.0 / 3.0 * c1 * c2 * std::f64::consts::E))
    }
}

/// `|| t ||a||_{theta(t),q} ||_F` for the K-profile `k`.
pub fn extrap_norm_k(k: &SampledFunction, lattice: &LatticeParam, q: ExponentMap) -> Result<LatticeNorm> {
    ExtrapProfile::new(k, q)?.norm(lattice)
}

/// How one corpus member entered a two-sided comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioCase {
    Finite(f64),
    /// Both sides diverge logarithmically; ratio of the values on the grid.
    CoDivergent(f64),
    Excluded(String),
    /// One side finite, the other not.
    Counterexample(String),
}

impl RatioCase {
    pub fn ratio(&self) -> Option<f64> {
        match self {
            Self::Finite(r) | Self::CoDivergent(r) => Some(*r),
            _ => None,
        }
    }

    /// Classifies `lhs / rhs`.
    pub fn compare(lhs: &LatticeNorm, rhs: &LatticeNorm) -> Self {
        match (lhs.divergent, rhs.divergent) {
            (false, false) if rhs.value > 0.0 => Self::Finite(lhs.value / rhs.value),
            (false, false) => Self::Excluded("zero norm".into()),
            (true, true) if lhs.is_mildly_divergent() && rhs.is_mildly_divergent() => {
                Self::CoDivergent(lhs.truncated_value / rhs.truncated_value)
            }
            (true, true) => Self::Excluded("both sides diverge".into()),
            (true, false) => Self::Counterexample("left side infinite, right side finite".into()),
            (false, true) => Self::Counterexample("left side finite, right side infinite".into()),
        }
    }
}

/// Min/median/max of the usable ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioWindow {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub used: usize,
}

impl RatioWindow {
    pub fn from_cases<'a>(cases: impl IntoIterator<Item = &'a RatioCase>) -> Option<Self> {
        let mut r: Vec<f64> = cases.into_iter().filter_map(RatioCase::ratio).collect();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        Some(Self { min: r[0], median: r[r.len() / 2], max: r[r.len() - 1], used: r.len() })
    }

    /// Largest relative change of either endpoint.
    pub fn drift(&self, other: &Self) -> f64 {
        ((other.min / self.min) - 1.0).abs().max(((other.max / self.max) - 1.0).abs())
    }

    /// Both endpoints within a factor `factor` of each other.
    pub fn agrees_with(&self, other: &Self, factor: f64) -> bool {
        let within = |a: f64, b: f64| a.max(b) <= factor * a.min(b);
        within(self.min, other.min) && within(self.max, other.max)
    }

    pub fn is_finite(&self) -> bool {
        self.min > 0.0 && self.max.is_finite()
    }
}

/// One corpus member with its extrapolation profile on a grid.
#[derive(Debug, Clone)]
pub struct BaseqSample {
    pub name: String,
    pub k: SampledFunction,
    pub extrap: ExtrapProfile,
}

impl BaseqSample {
    pub fn new(profile: &NamedProfile, grid: &Arc<LogGrid>, q: ExponentMap) -> Result<Self> {
        let k = profile.sample(grid);
        let extrap = ExtrapProfile::new(&k, q)?;
        Ok(Self { name: profile.name.clone(), k, extrap })
    }

    /// When the pointwise floor `g >= K / (2 sqrt e)` holds at every node, a
    /// divergent K-side forces the extrapolation side to diverge as well,
    /// whatever the tail fit of `g` says.
    pub fn case(&self, lattice: &LatticeParam) -> Result<RatioCase> {
        let mut lhs = self.extrap.norm(lattice)?;
        let rhs = lattice_norm(&self.k, lattice)?;
        if rhs.divergent && !lhs.divergent && self.extrap.floor_margin(&self.k, 1e-9).1 == 0 {
            lhs = LatticeNorm { value: f64::INFINITY, divergent: true, divergence_rate: rhs.divergence_rate, ..lhs };
        }
        Ok(RatioCase::compare(&lhs, &rhs))
    }
}

/// Per-profile cases for one lattice on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseqWindow {
    pub cases: Vec<(String, RatioCase)>,
    pub window: Option<RatioWindow>,
}

impl BaseqWindow {
    pub fn counterexamples(&self) -> impl Iterator<Item = &(String, RatioCase)> {
        self.cases.iter().filter(|(_, c)| matches!(c, RatioCase::Counterexample(_)))
    }
}

pub fn baseq_window(samples: &[BaseqSample], lattice: &LatticeParam) -> Result<BaseqWindow> {
    let mut cases = Vec::with_capacity(samples.len());
    for s in samples {
        cases.push((s.name.clone(), s.case(lattice)?));
    }
    cases.sort_by(|a, b| a.0.cmp(&b.0));
    let window = RatioWindow::from_cases(cases.iter().map(|(_, c)| c));
    Ok(BaseqWindow { cases, window })
}

/// Two-sided check on a grid and its refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseqReport {
    pub coarse: BaseqWindow,
    pub fine: BaseqWindow,
    pub drift: f64,
    pub floor_ok: bool,
    pub pass: bool,
}

impl BaseqReport {
    pub fn assemble(coarse: BaseqWindow, fine: BaseqWindow) -> Self {
        let drift = match (&coarse.window, &fine.window) {
            (Some(a), Some(b)) => a.drift(b),
            _ => f64::INFINITY,
        };
        let floor_ok = [&coarse, &fine]
            .iter()
            .all(|w| w.window.is_some_and(|w| w.min >= BASAUX_FLOOR * (1.0 - 1e-6)));
        let clean = coarse.counterexamples().next().is_none() && fine.counterexamples().next().is_none();
        let finite = coarse.window.is_some_and(|w| w.is_finite());
        Self { pass: clean && finite && floor_ok && drift < 0.05, coarse, fine, drift, floor_ok }
    }
}

/// Ratio `extrap_norm_k / lattice_norm(K, F)` over the K-profiles of the
/// corpus, on `grid` and on its refinement.
pub fn verify_baseq(
    corpus: &[NamedProfile],
    lattice: &LatticeParam,
    q: ExponentMap,
    grid: &Arc<LogGrid>,
) -> Result<BaseqReport> {
    let fine_grid = grid.refined();
    let mut windows = Vec::with_capacity(2);
    for g in [grid, &fine_grid] {
        let samples: Vec<BaseqSample> = corpus
            .iter()
            .filter(|p| p.is_k_profile(g))
            .map(|p| BaseqSample::new(p, g, q))
            .collect::<Result<_>>()?;
        if samples.is_empty() {
            return Err(domain("no corpus member is a K-profile"));
        }
        windows.push(baseq_window(&samples, lattice)?);
    }
    let fine = windows.pop().expect("two windows");
    let coarse = windows.pop().expect("two windows");
    Ok(BaseqReport::assemble(coarse, fine))
}

/// `t ||f||_{L^{q(t)}[0,1]}` with `q(t) = 2 log(e/t)`, the closed-form
/// counterpart of the extrapolation profile of `K(t, f; L^1, L^inf)` at
/// exponent map [`ExponentMap::LogE`].
pub fn lq_of_t_profile(fstar: &StepRearrangement, grid: &Arc<LogGrid>) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| t * fstar.lp_norm(2.0 * (1.0 - t.ln())))
}

/// Both sides of the sequence-space equivalence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqExtrap {
    /// `||{K(n, a; l^1, l^inf)}_n||_{F_d}`.
    pub k_side: f64,
    /// `||{||a||_{l^{p(n)}}}_n||_{F_d}`.
    pub l_side: f64,
}

impl SeqExtrap {
    pub fn ratio(&self) -> f64 {
        self.l_side / self.k_side
    }
}

/// Indices `1..=64` then geometric with ratio `2^{1/32}` up to `n_max`.
fn sparse_indices(n_max: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = (1..=n_max.min(64)).collect();
    let mut x = 64.0f64;
    while (x as usize) < n_max {
        x *= 2f64.powf(1.0 / 32.0);
        let n = (x.round() as usize).min(n_max);
        if n > *ns.last().expect("nonempty") {
            ns.push(n);
        }
    }
    ns
}

/// Evaluates both sides for the finite sequence `a` (zero past its end)
/// with indices `n = 1..=a.len()`. The `l^{p(n)}` side is computed on a
/// geometric subset of `n` and interpolated in `log n` for finite-`q`
/// lattices.
pub fn seq_extrap_norm(a: &SequenceData, lattice: &SeqLattice) -> Result<SeqExtrap> {
    let n_max = a.len();
    if n_max == 0 {
        return Err(argument("empty sequence"));
    }
    let k: Vec<f64> = (1..=n_max).map(|n| a.partial_sum(n)).collect();
    let k_side = lattice.norm(&k);
    let ns = sparse_indices(n_max);
    let lp: Vec<f64> = ns
        .iter()
        .map(|&n| p_of_n(n as f64).map(|p| a.lp_norm(p)))
        .collect::<Result<_>>()?;
    let l_side = if lattice.q.is_infinite() {
        lattice.sup_on(&ns, &lp)
    } else {
        let mut full = Vec::with_capacity(n_max);
        let mut seg = 0;
        for n in 1..=n_max {
            while seg + 1 < ns.len() && ns[seg + 1] < n {
                seg += 1;
            }
            if ns[seg] == n || seg + 1 == ns.len() {
                full.push(lp[seg]);
            } else {
                let (x0, x1) = ((ns[seg] as f64).ln(), (ns[seg + 1] as f64).ln());
                let w = ((n as f64).ln() - x0) / (x1 - x0);
                full.push(lp[seg] * (1.0 - w) + lp[seg + 1] * w);
            }
        }
        lattice.norm(&full)
    };
    Ok(SeqExtrap { k_side, l_side })
}

/// Normalized `(l^1, l^inf)_{1-1/p, p}` norm of `a` from the piecewise
/// linear K-functional: `(p theta (1-theta))^{1/p} (int_0^inf (t^{-theta}
/// K(t))^p dt/t)^{1/p}` with `theta = 1 - 1/p`.
pub fn hardy_k_norm(a: &SequenceData, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(argument(format!("p must lie in (1, inf), got {p}")));
    }
    const X: [f64; 8] = [
        -0.960_289_856_497_536_3,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 8] = [
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let theta = 1.0 - 1.0 / p;
    let n = a.len();
    let top = a.get(1);
    if top == 0.0 {
        return Ok(0.0);
    }
    // K(t) = a_1 t on [0, 1]: (1 - theta) p = 1
    let mut acc = 1.0;
    for j in 1..n {
        let (lo, hi) = (j as f64, (j + 1) as f64);
        let (mid, half) = (0.5 * (lo + hi), 0.5);
        for (x, w) in X.iter().zip(W) {
            let t = mid + half * x;
            let kt = k_discrete_interp(t, a)? / top;
            acc += w * half * (t.powf(-theta) * kt).powf(p) / t;
        }
    }
    let total = a.partial_sum(n) / top;
    acc += total.powf(p) * (n as f64).powf(-theta * p) / (theta * p);
    Ok(top * (p * theta * (1.0 - theta) * acc).powf(1.0 / p))
}

/// Position of `a` in `||a||_p <= hardy_k_norm <= e ||a||_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyCheck {
    pub lp: f64,
    pub k_norm: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

pub fn hardy_chain(a: &SequenceData, p: f64, slack: f64) -> Result<HardyCheck> {
    let lp = a.lp_norm(p);
    let k_norm = hardy_k_norm(a, p)?;
    Ok(HardyCheck {
        lp,
        k_norm,
        lower_ok: k_norm >= lp * (1.0 - slack),
        upper_ok: k_norm <= std::f64::consts::E * lp * (1.0 + slack),
    })
}

/// `int_0^{t_k} s^{-theta} K(s) ds/s` at every node (`+inf` when the
/// integral diverges).
fn lower_primitive(k: &SampledFunction, theta: f64) -> Vec<f64> {
    let grid = k.grid();
    let h = grid.h();
    let n = grid.last_index();
    let ln: Vec<f64> = k.values().iter().enumerate().map(|(j, v)| theta * grid.u(j) + v.ln()).collect();
    let whole = log_quadrature_by(n + 1, h, |i| ln[i]);
    let mut out = vec![0.0; n + 1];
    out[n] = if whole.is_divergent() { f64::INFINITY } else { whole.tail };
    for j in (0..n).rev() {
        out[j] = out[j + 1] + crate::grid::cell_integral(ln[j].exp(), ln[j + 1].exp(), h);
    }
    out
}

/// `H_theta(t) = int_0^{t^{1/(1-theta)}} s^{-theta} K(s) ds/s`, the
/// Holmstedt form of `K(t, a; A_{theta,1}, A_1)`, on the nodes `t_j` with
/// `j / (1 - theta)` inside the grid (a truncated grid).
pub fn holmstedt_upper(k: &SampledFunction, theta: f64) -> Result<SampledFunction> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(argument(format!("theta must lie in (0,1), got {theta}")));
    }
    let grid = k.grid();
    let n = grid.last_index();
    let prim = lower_primitive(k, theta);
    if prim[n].is_infinite() {
        return Err(domain("int_0 s^{-theta} K(s) ds/s diverges"));
    }
    let stretch = 1.0 / (1.0 - theta);
    let last = ((n as f64) / stretch).floor() as usize;
    let h = grid.h();
    let values = (0..=last)
        .map(|j| {
            let x = j as f64 * stretch;
            let i = x.ceil() as usize;
            if i as f64 == x || i > n {
                return prim[i.min(n)];
            }
            // partial cell [x, i] with the log-linear integrand
            let g = |y: f64| (theta * y * h).exp() * k.at_position(y);
            prim[i] + crate::grid::cell_integral(g(x), g(i as f64), (i as f64 - x) * h)
        })
        .collect();
    SampledFunction::from_values(grid.truncated(last), values, Measure::Haar)
}

fn restrict(f: &SampledFunction, last: usize) -> Result<SampledFunction> {
    SampledFunction::from_values(f.grid().truncated(last), f.values()[..=last].to_vec(), f.measure())
}

/// Forward `||H_theta||_F / ||K||_F` and backward `||K||_F / ||H_theta||_F`
/// cases for one profile, both norms taken on the common truncated grid.
pub fn reiteration_cases(k: &SampledFunction, theta: f64, lattice: &LatticeParam) -> Result<(RatioCase, RatioCase)> {
    let hk = match holmstedt_upper(k, theta) {
        Ok(hk) => hk,
        Err(e) => {
            let why = RatioCase::Excluded(e.to_string());
            return Ok((why.clone(), why));
        }
    };
    let kk = restrict(k, hk.grid().last_index())?;
    let nh = lattice_norm(&hk, lattice)?;
    let nk = lattice_norm(&kk, lattice)?;
    Ok((RatioCase::compare(&nh, &nk), RatioCase::compare(&nk, &nh)))
}

/// `t sup_{t^{1/theta} <= s <= 1} s^{-theta} K(s)`, the Holmstedt form of
/// `K(t, f; A_0, A_{theta,inf})`, on the nodes with `j / theta` inside
/// the grid.
pub fn holmstedt_lower_end(k: &SampledFunction, theta: f64) -> Result<SampledFunction> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(argument(format!("theta must lie in (0,1), got {theta}")));
    }
    let grid = k.grid();
    let n = grid.last_index();
    let last = ((n as f64) * theta).floor() as usize;
    let h = grid.h();
    let w: Vec<f64> = k.values().iter().enumerate().map(|(i, v)| (theta * grid.u(i)).exp() * v).collect();
    let mut values = Vec::with_capacity(last + 1);
    for j in 0..=last {
        let x = j as f64 / theta;
        let i1 = x.floor() as usize;
        let mut best = w[..=i1.min(n)].iter().copied().fold(0.0, f64::max);
        if (i1 as f64) < x && i1 < n {
            best = best.max((theta * x * h).exp() * k.at_position(x));
        }
        values.push(grid.node(j) * best);
    }
    SampledFunction::from_values(grid.truncated(last), values, Measure::Haar)
}

/// `K(t^{1/theta})` on the same truncated grid as [`holmstedt_lower_end`].
pub fn k_at_power(k: &SampledFunction, theta: f64) -> Result<SampledFunction> {
    let n = k.grid().last_index();
    let last = ((n as f64) * theta).floor() as usize;
    let values = (0..=last).map(|j| k.at_position(j as f64 / theta)).collect();
    SampledFunction::from_values(k.grid().truncated(last), values, Measure::Haar)
}

/// Limiting reiteration for one profile: `||K(t, f; A_0, A_{theta,inf})||_G
/// / ||K(t, f)||_G` and `||K(t)||_G / ||K(t^{1/theta})||_G`, on the common
/// truncated grid.
pub fn limiting_reiteration_cases(
    k: &SampledFunction,
    theta: f64,
    lattice: &LatticeParam,
) -> Result<(RatioCase, RatioCase)> {
    let upper = holmstedt_lower_end(k, theta)?;
    let last = upper.grid().last_index();
    let kk = restrict(k, last)?;
    let kp = k_at_power(k, theta)?;
    let nu = lattice_norm(&upper, lattice)?;
    let nk = lattice_norm(&kk, lattice)?;
    let np = lattice_norm(&kp, lattice)?;
    Ok((RatioCase::compare(&nu, &nk), RatioCase::compare(&nk, &np)))
}

/// `||K(t, f; L^{p1}, L^inf)||_F / ||K(t, f; L^{p2}, L^inf)||_F`.
pub fn lp_linf_case(fstar: &StepRearrangement, p1: f64, p2: f64, lattice: &LatticeParam, grid: &Arc<LogGrid>) -> Result<RatioCase> {
    let k1 = SampledFunction::from_values(
        grid.clone(),
        grid.nodes().iter().map(|&t| k_lp_linf(t, p1, fstar)).collect::<Result<_>>()?,
        Measure::Haar,
    )?;
    let k2 = SampledFunction::from_values(
        grid.clone(),
        grid.nodes().iter().map(|&t| k_lp_linf(t, p2, fstar)).collect::<Result<_>>()?,
        Measure::Haar,
    )?;
    Ok(RatioCase::compare(&lattice_norm(&k1, lattice)?, &lattice_norm(&k2, lattice)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfunctional::QuasiConcaveProfile;
    use crate::lattice::{profile_corpus, ProfileShape};

    fn grid() -> Arc<LogGrid> {
        LogGrid::default_grid()
    }

    #[test]
    fn parameter_maps() {
        assert_eq!(theta_of_t(1.0).unwrap(), 0.5);
        assert!((theta_of_t((-1.0f64).exp()).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(p_of_n(1.0).unwrap(), 2.0);
        assert!(p_of_n(1e12).unwrap() < 1.02);
        assert!(theta_of_t(0.0).is_err() && eta_of_t(0.5).is_err() && p_of_n(0.5).is_err());
        for &t in grid().nodes() {
            let th = theta_of_t(t).unwrap();
            assert!((0.5..1.0).contains(&th));
            let xi = xi_of_t(t).unwrap();
            assert!(xi > 0.0 && xi <= 0.5);
            assert!((th + xi - 1.0).abs() < 1e-15);
            assert!(t.powf(1.0 - th) >= (-0.5f64).exp() * (1.0 - 1e-15));
            assert!((q_of_t(t).unwrap() * xi - 1.0).abs() < 1e-15);
            let s = 1.0 / t;
            let eta = eta_of_t(s).unwrap();
            assert!(eta > 0.0 && eta <= 0.5);
            let p = p_of_n(s).unwrap();
            assert!(p > 1.0 && p <= 2.0);
        }
    }

    // closed form of the restricted normalized norm of K = t at (theta, q):
    // c (int_0^1 s^{(1-theta) q} ds/s)^{1/q} = theta^{1/q}
    #[test]
    fn linear_profile_inner_norms() {
        let g = grid();
        let k = SampledFunction::from_fn(g.clone(), Measure::Haar, |t| t).unwrap();
        for q in [1.0, 2.0, f64::INFINITY] {
            let ep = ExtrapProfile::new(&k, ExponentMap::Fixed(q)).unwrap();
            for j in (0..g.len()).step_by(97) {
                let t = g.node(j);
                let th = theta_of_t(t).unwrap();
                let want = t * if q.is_infinite() { 1.0 } else { th.powf(1.0 / q) };
                let got = ep.values()[j];
                assert!((got / want - 1.0).abs() < 1e-6, "q={q} t={t}: {got} vs {want}");
            }
            let (margin, bad) = ep.floor_margin(&k, 1e-9);
            assert_eq!(bad, 0);
            assert!(margin > 0.0);
        }
    }

    #[test]
    fn linf_inv_t_gives_sup_of_inner_norms() {
        let g = grid();
        let k = QuasiConcaveProfile::piecewise_linear(&[(0.01, 0.5), (1.0, 1.0)]).unwrap().sample(&g);
        let ep = ExtrapProfile::new(&k, ExponentMap::Fixed(2.0)).unwrap();
        let n = ep.norm(&LatticeParam::linf_inv_t()).unwrap();
        let sup = ep.values().iter().zip(g.nodes()).map(|(v, t)| v / t).fold(0.0, f64::max);
        assert!((n.truncated_value / sup - 1.0).abs() < 1e-12);
        // inner norms grow like K'(0) theta(t)^{1/2} -> 50 as t -> 0; the
        // extrapolated sup recovers the limit
        assert!((n.value / 50.0 - 1.0).abs() < 1e-3, "{n:?}");
    }

    #[test]
    fn sqrt_growth_is_pointwise_infinite() {
        let k = SampledFunction::from_fn(grid(), Measure::Haar, |t| t.powf(0.75)).unwrap();
        let ep = ExtrapProfile::new(&k, ExponentMap::Fixed(1.0)).unwrap();
        assert!(ep.pointwise_infinite());
        assert!(ep.norm(&LatticeParam::linf()).unwrap().divergent);
        // F-norm finite, extrapolation infinite: the negative control
        let case = RatioCase::compare(&ep.norm(&LatticeParam::linf()).unwrap(), &lattice_norm(&k, &LatticeParam::linf()).unwrap());
        assert!(matches!(case, RatioCase::Counterexample(_)));
    }

    #[test]
    fn baseq_window_fk_lattice() {
        let g = LogGrid::new(1e-8, 32).unwrap();
        let corpus: Vec<NamedProfile> = profile_corpus(6, 11, g.t_min())
            .into_iter()
            .filter(|p| matches!(p.shape, ProfileShape::Concave(_)))
            .collect();
        let r = verify_baseq(&corpus, &LatticeParam::fk(2.0), ExponentMap::Fixed(1.0), &g).unwrap();
        let w = r.coarse.window.unwrap();
        assert_eq!(w.used, 6);
        assert!(w.min >= BASAUX_FLOOR, "{w:?}");
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn lq_of_t_tracks_extrapolation_profile() {
        let g = LogGrid::new(1e-8, 32).unwrap();
        let fstar = StepRearrangement::new(vec![0.0, 0.001, 0.1, 1.0], vec![30.0, 3.0, 1.0]).unwrap();
        let k = SampledFunction::from_fn(g.clone(), Measure::Haar, |t| crate::kfunctional::k_l1_linf(t, &fstar).unwrap()).unwrap();
        let ep = ExtrapProfile::new(&k, ExponentMap::LogE).unwrap();
        let lq = lq_of_t_profile(&fstar, &g).unwrap();
        for (a, b) in ep.values().iter().zip(lq.values()) {
            let r = a / b;
            assert!(r > 0.2 && r < 5.0, "{r}");
        }
    }

    #[test]
    fn sequence_unit_vector() {
        let a = SequenceData::new(vec![1.0]).unwrap();
        let m = SeqLattice::matsaev(1.0);
        let s = seq_extrap_norm(&a, &m).unwrap();
        assert_eq!(s.k_side, 1.0);
        assert_eq!(s.l_side, 1.0);
        let a = SequenceData::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = seq_extrap_norm(&a, &SeqLattice { a: 1.0, b: 0.0, q: 2.0 }).unwrap();
        assert!((s.ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_sequence_matsaev() {
        let n = 100_000;
        let a = SequenceData::new((1..=n).map(|j| 1.0 / j as f64).collect()).unwrap();
        let s = seq_extrap_norm(&a, &SeqLattice::matsaev(1.0)).unwrap();
        // independent: H_n / log(e n) over all n
        let mut h = 0.0;
        let mut best = 0.0f64;
        for j in 1..=n {
            h += 1.0 / j as f64;
            best = best.max(h / (1.0 + (j as f64).ln()));
        }
        assert!((s.k_side - best).abs() < 1e-12);
        assert!(s.k_side >= 1.0 && s.k_side <= 1.0 + 0.577_215_664_901_532_9);
        assert!(s.l_side.is_finite() && s.ratio() > 0.1 && s.ratio() < 10.0);
    }

    #[test]
    fn hardy_unit_vector_and_chain() {
        let e1 = SequenceData::new(vec![1.0]).unwrap();
        for p in [1.5, 2.0, 4.0] {
            assert!((hardy_k_norm(&e1, p).unwrap() - 1.0).abs() < 1e-12);
        }
        let a = SequenceData::new((1..=50).map(|j| 1.0 / (j as f64).sqrt()).collect()).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let c = hardy_chain(&a, p, 1e-3).unwrap();
            assert!(c.lower_ok && c.upper_ok, "{c:?}");
        }
    }

    #[test]
    fn holmstedt_upper_of_linear_profile() {
        // K = t: H(t) = t / (1 - theta)
        let g = grid();
        let k = SampledFunction::from_fn(g.clone(), Measure::Haar, |t| t).unwrap();
        for theta in [0.5, 0.3] {
            let hk = holmstedt_upper(&k, theta).unwrap();
            for (t, v) in hk.grid().nodes().iter().zip(hk.values()) {
                assert!((v / (t / (1.0 - theta)) - 1.0).abs() < 1e-6, "theta={theta} t={t}");
            }
        }
    }

    #[test]
    fn limiting_forms_of_linear_profile() {
        // K = min(t,1): sup_{t^{1/theta}<=s<=1} s^{1-theta} = 1, so the form is t;
        // K(t^{1/theta}) = t^{1/theta}
        let g = grid();
        let k = SampledFunction::from_fn(g.clone(), Measure::Haar, |t| t).unwrap();
        let u = holmstedt_lower_end(&k, 0.5).unwrap();
        let p = k_at_power(&k, 0.5).unwrap();
        for ((t, a), b) in u.grid().nodes().iter().zip(u.values()).zip(p.values()) {
            assert!((a / t - 1.0).abs() < 1e-12);
            assert!((b / (t * t) - 1.0).abs() < 1e-9);
        }
        let (c1, c2) = limiting_reiteration_cases(&k, 0.5, &LatticeParam::l1_haar()).unwrap();
        assert!((c1.ratio().unwrap() - 1.0).abs() < 1e-6);
        assert!((c2.ratio().unwrap() - 2.0).abs() < 1e-6);
    }
}

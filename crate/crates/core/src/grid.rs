//! Dyadic-log grids, sampled functions, quadrature and decreasing
//! rearrangements.
//!
//! Nodes are `t_k = exp(-h k)` with `h = ln 2 / points_per_octave`, so
//! `t_k^2 = t_{2k}` and the substitutions used by the extrapolation
//! operators are index arithmetic. Integrals are taken in the variable
//! `u = -ln t`; the deep end below the last node is handled by a tail model
//! (see [`Integral`]).

use std::f64::consts::LN_2;
use std::sync::Arc;

use crate::error::{argument, domain as domain_error, Result};

pub const DEFAULT_T_MIN: f64 = 1e-12;
pub const DEFAULT_PPO: u32 = 64;

/// Dyadic-log grid on `(0, 1]`; node 0 is `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    t_min: f64,
    ppo: u32,
    h: f64,
    nodes: Vec<f64>,
}

impl LogGrid {
    /// Builds the grid whose last node is the first `t_k <= t_min`.
    pub fn new(t_min: f64, points_per_octave: u32) -> Result<Arc<Self>> {
        if !(t_min > 0.0 && t_min < 1.0) {
            return Err(argument(format!("t_min must lie in (0,1), got {t_min}")));
        }
        if points_per_octave == 0 {
            return Err(argument("points_per_octave must be positive"));
        }
        let h = LN_2 / points_per_octave as f64;
        let last = ((-t_min.ln()) / h - 1e-9).ceil().max(1.0) as usize;
        Ok(Arc::new(Self::build(t_min, points_per_octave, last)))
    }

    /// Grid with nodes `0..=last`.
    pub fn with_last_index(points_per_octave: u32, last: usize) -> Arc<Self> {
        let h = LN_2 / points_per_octave as f64;
        Arc::new(Self::build((-(h * last as f64)).exp(), points_per_octave, last))
    }

    pub fn default_grid() -> Arc<Self> {
        Self::new(DEFAULT_T_MIN, DEFAULT_PPO).expect("default grid parameters are valid")
    }

    fn build(t_min: f64, ppo: u32, last: usize) -> Self {
        let h = LN_2 / ppo as f64;
        let nodes = (0..=last).map(|k| (-(h * k as f64)).exp()).collect();
        Self { t_min, ppo, h, nodes }
    }

    /// Same spacing, nodes `0..=last` only.
    pub fn truncated(&self, last: usize) -> Arc<Self> {
        let last = last.min(self.last_index());
        Arc::new(Self {
            t_min: self.nodes[last],
            ppo: self.ppo,
            h: self.h,
            nodes: self.nodes[..=last].to_vec(),
        })
    }

    /// Same `t_min`, twice the points per octave.
    pub fn refined(&self) -> Arc<Self> {
        Self::new(self.t_min, self.ppo * 2).expect("refining a valid grid")
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn points_per_octave(&self) -> u32 {
        self.ppo
    }

    /// Requested lower end; the last node is `<=` this value.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn last_index(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Log coordinate `u_k = h k = -ln t_k`.
    pub fn u(&self, k: usize) -> f64 {
        self.h * k as f64
    }

    /// Index of `t_k^2`, if it is on the grid.
    pub fn square_index(&self, k: usize) -> Option<usize> {
        let j = 2 * k;
        (j <= self.last_index()).then_some(j)
    }

    /// Index of `sqrt(t_k)`; defined for even `k` only.
    pub fn sqrt_index(&self, k: usize) -> Option<usize> {
        (k.is_multiple_of(2) && k <= self.last_index()).then_some(k / 2)
    }

    /// Fractional index of the point `t` (0 at `t = 1`).
    pub fn position(&self, t: f64) -> f64 {
        -t.ln() / self.h
    }

    /// Geometric-mean coarsening is not needed; this is the fractional
    /// position of the mirrored point `t >= 1`.
    pub fn upper_position(&self, t: f64) -> f64 {
        t.ln() / self.h
    }
}

/// Measure attached to a sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Lebesgue measure `ds`.
    Lebesgue,
    /// Haar measure `ds/s`.
    Haar,
}

/// Which half-line the samples live on. `Upper` mirrors the grid: sample
/// `k` sits at `exp(h k) = 1 / t_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Unit,
    Upper,
}

/// Nonnegative function sampled at grid nodes, piecewise linear in
/// `(log t, value)` between them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Arc<LogGrid>,
    values: Vec<f64>,
    measure: Measure,
    domain: Domain,
}

impl SampledFunction {
    pub fn from_values(grid: Arc<LogGrid>, values: Vec<f64>, measure: Measure) -> Result<Self> {
        Self::with_domain(grid, values, measure, Domain::Unit)
    }

    pub fn with_domain(
        grid: Arc<LogGrid>,
        values: Vec<f64>,
        measure: Measure,
        domain: Domain,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(argument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(domain_error(format!("sample {k} is {v}; values must be finite and >= 0")));
        }
        Ok(Self { grid, values, measure, domain })
    }

    /// Samples `f` at the nodes of `grid` on `(0, 1]`.
    pub fn from_fn(grid: Arc<LogGrid>, measure: Measure, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::from_values(grid, values, measure)
    }

    /// Samples `f` at the mirrored nodes `1/t_k` on `[1, inf)`.
    pub fn upper_from_fn(grid: Arc<LogGrid>, measure: Measure, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(1.0 / t)).collect();
        Self::with_domain(grid, values, measure, Domain::Upper)
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    /// Location of sample `k`.
    pub fn point(&self, k: usize) -> f64 {
        match self.domain {
            Domain::Unit => self.grid.node(k),
            Domain::Upper => 1.0 / self.grid.node(k),
        }
    }

    /// Value at fractional index `x` (linear in the log coordinate).
    pub fn at_position(&self, x: f64) -> f64 {
        let last = self.grid.last_index();
        if x <= 0.0 {
            return self.values[0];
        }
        if x >= last as f64 {
            return self.values[last];
        }
        let k = x.floor() as usize;
        let w = x - k as f64;
        if w == 0.0 {
            return self.values[k];
        }
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    /// Value at the point `t` (clamped to the sampled range).
    pub fn eval(&self, t: f64) -> f64 {
        let x = match self.domain {
            Domain::Unit => self.grid.position(t),
            Domain::Upper => self.grid.upper_position(t),
        };
        self.at_position(x)
    }

    /// Pointwise map `(point, value) -> value`.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.point(k), v))
            .collect();
        Self::with_domain(self.grid.clone(), values, self.measure, self.domain)
    }

    /// Integrand in the log coordinate: `f` for `ds/s`, `f * t` for `ds`.
    pub(crate) fn log_integrand(&self) -> Vec<f64> {
        match self.measure {
            Measure::Haar => self.values.clone(),
            Measure::Lebesgue => self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| v * self.point(k))
                .collect(),
        }
    }

    fn log_integrand_at(&self, x: f64) -> f64 {
        let v = self.at_position(x);
        match (self.measure, self.domain) {
            (Measure::Haar, _) => v,
            (Measure::Lebesgue, Domain::Unit) => v * (-(self.grid.h * x)).exp(),
            (Measure::Lebesgue, Domain::Upper) => v * (self.grid.h * x).exp(),
        }
    }

    /// Sum of cell value times cell measure over the step approximation
    /// used by [`rearrange`]; the identity `cell_sum == rearrange(f).l1()`
    /// holds up to summation order.
    pub fn cell_sum(&self) -> f64 {
        self.cells().map(|(v, m)| v * m).sum()
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let nodes = self.grid.nodes();
        let last = self.grid.last_index();
        let bottom = std::iter::once((self.values[last], nodes[last]));
        let inner = (0..last).map(move |k| {
            (
                0.5 * (self.values[k] + self.values[k + 1]),
                nodes[k] - nodes[k + 1],
            )
        });
        bottom.chain(inner)
    }
}

/// Result of a quadrature on a truncated log grid.
///
/// `value` is the integral over the sampled range; `tail` estimates the
/// part below the last node. `divergence` carries the fitted power-decay
/// exponent of the integrand in the log coordinate when the tail is judged
/// divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub tail: f64,
    pub divergence: Option<f64>,
    pub truncated: bool,
}

impl Integral {
    pub fn zero() -> Self {
        Self { value: 0.0, tail: 0.0, divergence: None, truncated: false }
    }

    pub fn is_divergent(&self) -> bool {
        self.divergence.is_some()
    }

    /// Value plus tail, or `+inf` when divergent.
    pub fn total(&self) -> f64 {
        if self.is_divergent() {
            f64::INFINITY
        } else {
            self.value + self.tail
        }
    }

    /// Value plus tail regardless of divergence (a truncated estimate).
    pub fn truncated_total(&self) -> f64 {
        self.value + if self.tail.is_finite() { self.tail } else { 0.0 }
    }

    /// Divergence slower than any fixed power of `u`, e.g. harmonic.
    pub fn is_mildly_divergent(&self) -> bool {
        matches!(self.divergence, Some(rate) if rate > 0.5)
    }
}

/// Exact integral over one cell of width `h` of the log-linear interpolant
/// through `g0`, `g1`; falls back to the trapezoid when a value is zero.
#[inline]
pub fn cell_integral(g0: f64, g1: f64, h: f64) -> f64 {
    if g0 > 0.0 && g1 > 0.0 {
        let d = (g1 / g0).ln();
        cell_from_log(g0, d, h)
    } else {
        0.5 * h * (g0 + g1)
    }
}

#[inline]
fn cell_from_log(g0: f64, d: f64, h: f64) -> f64 {
    h * g0 * expm1_ratio(d)
}

/// Tail of `int_{u_N}^{inf} g(u) du` from the last samples.
///
/// The local decay rate `rho = -(ln g)'` is read off at the last cell and
/// three octaves earlier (a quarter of the grid when that is shorter);
/// `1/rho` is taken to be linear in `u` with
/// slope `s`. This is exact for `exp(-c u)` (`s = 0`) and for shifted
/// powers `(u + c)^(-beta)` (`s = 1/beta`), and the tail is
/// `g_N / (rho_N (1 - s))`. For `s >= 0.99` the tail is reported divergent:
/// a power decay with exponent below `1.01` is indistinguishable from the
/// harmonic one over a few dozen units of `u`, and its tail would exceed
/// `100 g_N u_N` anyway. The returned rate is `1/s` (0 when `g` does not
/// decay at all).
pub fn tail_estimate(g: &[f64], h: f64) -> (f64, Option<f64>) {
    let n = g.len() - 1;
    tail_model(n, h, |k| if g[k] > 0.0 { g[k].ln() } else { f64::NEG_INFINITY })
}

/// Decay rates below this are treated as divergent (see [`tail_estimate`]).
pub const DIVERGENT_RATE: f64 = 1.0 / 0.99;

/// Slope of `1/rho` in `u` over the last three octaves; `None` when the
/// samples end in zeros or stop decaying.
fn decay_slope(n: usize, h: f64, ln_at: &impl Fn(usize) -> f64) -> Option<(f64, f64)> {
    let rate_at = |k: usize| {
        let l = ln_at(k - 1);
        if l == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (l - ln_at(k)) / h
        }
    };
    let rho_n = rate_at(n);
    if rho_n == f64::NEG_INFINITY || rho_n < 1e-9 {
        return None;
    }
    let back = ((3.0 * std::f64::consts::LN_2 / h).round() as usize).min(n / 4);
    let m = n - back;
    let s = if m >= 1 && back >= 4 {
        let rho_m = rate_at(m);
        if rho_m > 0.0 && rho_m.is_finite() {
            (1.0 / rho_n - 1.0 / rho_m) / (back as f64 * h)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some((rho_n, s))
}

fn tail_model(n: usize, h: f64, ln_at: impl Fn(usize) -> f64) -> (f64, Option<f64>) {
    let ln_n = ln_at(n);
    if ln_n == f64::NEG_INFINITY || n == 0 {
        return (0.0, None);
    }
    let Some((rho_n, s)) = decay_slope(n, h, &ln_at) else {
        return (f64::INFINITY, Some(0.0));
    };
    if s >= 1.0 / DIVERGENT_RATE {
        return (f64::INFINITY, Some(1.0 / s));
    }
    (ln_n.exp() / (rho_n * (1.0 - s)), None)
}

/// Exponent `beta` of a fitted power decay `(u + c)^(-beta)` of the
/// samples; `None` when they decay faster than any power (or end in zeros).
pub fn power_decay_exponent(g: &[f64], h: f64) -> Option<f64> {
    let n = g.len().checked_sub(1)?;
    if n == 0 || !(g[n] > 0.0) {
        return None;
    }
    let ln_at = |k: usize| if g[k] > 0.0 { g[k].ln() } else { f64::NEG_INFINITY };
    match decay_slope(n, h, &ln_at) {
        None => Some(0.0),
        Some((_, s)) if s > 0.0 => Some(1.0 / s),
        Some(_) => None,
    }
}

/// Limit of `ln g` beyond the grid for a log-profile still increasing at
/// its last sample: the slope `(ln g)'` is extrapolated with the tail
/// model. Returns `None` when the extrapolated growth is unbounded.
pub(crate) fn sup_limit_ln(len: usize, h: f64, ln_at: impl Fn(usize) -> f64) -> Option<f64> {
    let n = len - 1;
    let slope = |k: usize| {
        let d = (ln_at(k + 1) - ln_at(k)) / h;
        if d > 0.0 {
            d.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let (rest, divergence) = tail_model(n - 1, h, slope);
    if divergence.is_some() {
        None
    } else {
        Some(ln_at(n) + rest)
    }
}

/// Quadrature of samples `g_k = g(k h)`, `k = 0..=N`, over `[0, inf)`.
pub fn log_quadrature(g: &[f64], h: f64) -> Integral {
    if g.len() < 2 {
        return Integral::zero();
    }
    let value = g.windows(2).map(|w| cell_integral(w[0], w[1], h)).sum();
    let (tail, divergence) = tail_estimate(g, h);
    Integral { value, tail, divergence, truncated: true }
}

/// `expm1(d) / d`, with a short series near zero.
#[inline]
pub(crate) fn expm1_ratio(d: f64) -> f64 {
    if d.abs() < 0.05 {
        1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d * (1.0 / 120.0 + d / 720.0))))
    } else {
        d.exp_m1() / d
    }
}

/// [`log_quadrature`] on samples given as logarithms (`-inf` for zero).
pub fn log_quadrature_ln(ln_g: &[f64], h: f64) -> Integral {
    log_quadrature_by(ln_g.len(), h, |k| ln_g[k])
}

/// [`log_quadrature_ln`] with the log-samples produced on demand.
pub fn log_quadrature_by(len: usize, h: f64, ln_at: impl Fn(usize) -> f64) -> Integral {
    if len < 2 {
        return Integral::zero();
    }
    let mut value = 0.0;
    // curvature of ln g, the leading error of the log-linear cell rule
    let mut bend = 0.0;
    let mut lm = f64::NEG_INFINITY;
    let mut l0 = ln_at(0);
    for k in 1..len {
        let l1 = ln_at(k);
        if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY {
            value += 0.5 * h * (l0.exp() + l1.exp());
        } else {
            let g0 = l0.exp();
            value += h * g0 * expm1_ratio(l1 - l0);
            if lm != f64::NEG_INFINITY {
                bend += (l1 - 2.0 * l0 + lm) * g0;
            }
        }
        lm = l0;
        l0 = l1;
    }
    value -= h * bend / 12.0;
    let (tail, divergence) = tail_model(len - 1, h, &ln_at);
    Integral { value, tail, divergence, truncated: true }
}

/// `int_a^b f` with the measure attached to `f`.
///
/// On the unit domain `0 <= a <= b <= 1`; `a` below the last node raises the
/// truncation flag and adds the tail model (the whole tail when `a == 0`).
/// On the upper domain `1 <= a <= b <= inf` with the same conventions at the
/// far end.
pub fn integrate(f: &SampledFunction, a: f64, b: f64) -> Result<Integral> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(argument(format!("integration bounds must satisfy a <= b, got [{a}, {b}]")));
    }
    let grid = f.grid();
    let h = grid.h();
    let last = grid.last_index() as f64;
    let (x_lo, x_hi) = match f.domain() {
        Domain::Unit => {
            if a < 0.0 || b > 1.0 + 1e-15 {
                return Err(argument(format!("[{a}, {b}] is not inside (0, 1]")));
            }
            let x_hi = if a == 0.0 { f64::INFINITY } else { grid.position(a) };
            (grid.position(b.min(1.0)).max(0.0), x_hi)
        }
        Domain::Upper => {
            if a < 1.0 - 1e-15 {
                return Err(argument(format!("[{a}, {b}] is not inside [1, inf)")));
            }
            (grid.upper_position(a.max(1.0)).max(0.0), grid.upper_position(b))
        }
    };
    let g = f.log_integrand();
    let mut value = 0.0;
    let end = x_hi.min(last);
    if end > x_lo {
        let k0 = x_lo.ceil() as usize;
        let k1 = end.floor() as usize;
        if k0 > k1 {
            // both ends inside one cell
            value += cell_integral(f.log_integrand_at(x_lo), f.log_integrand_at(end), (end - x_lo) * h);
        } else {
            if (k0 as f64) > x_lo {
                value += cell_integral(f.log_integrand_at(x_lo), g[k0], (k0 as f64 - x_lo) * h);
            }
            for k in k0..k1 {
                value += cell_integral(g[k], g[k + 1], h);
            }
            if end > k1 as f64 {
                value += cell_integral(g[k1], f.log_integrand_at(end), (end - k1 as f64) * h);
            }
        }
    }
    let mut out = Integral { value, tail: 0.0, divergence: None, truncated: false };
    if x_hi > last {
        out.truncated = true;
        let (tail, divergence) = tail_estimate(&g, h);
        if x_hi.is_infinite() {
            out.tail = tail;
            out.divergence = divergence;
        } else {
            out.tail = partial_tail(&g, h, (x_hi - last) * h);
        }
    }
    Ok(out)
}

// tail restricted to [u_N, u_N + span] under the exponential model with
// the local rate; used for finite bounds below the grid.
fn partial_tail(g: &[f64], h: f64, span: f64) -> f64 {
    let n = g.len() - 1;
    let gn = g[n];
    if gn <= 0.0 {
        return 0.0;
    }
    let c = if g[n - 1] > 0.0 { (g[n - 1] / gn).ln() / h } else { 0.0 };
    if c.abs() < 1e-12 {
        gn * span
    } else {
        gn * (-(-c * span).exp_m1()) / c
    }
}

/// `max_k weight(t_k) * |f(t_k)|`.
pub fn sup_norm(f: &SampledFunction, weight: impl Fn(f64) -> f64) -> f64 {
    f.values()
        .iter()
        .enumerate()
        .map(|(k, v)| weight(f.point(k)) * v.abs())
        .fold(0.0, f64::max)
}

/// Right-continuous nonincreasing step function on `[0, support)`, zero
/// afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRearrangement {
    breaks: Vec<f64>,
    levels: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepRearrangement {
    /// Validated construction from `breaks` (`breaks[0] == 0`, increasing)
    /// and nonincreasing nonnegative `levels` (`levels.len() + 1 ==
    /// breaks.len()`).
    pub fn new(breaks: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if breaks.len() != levels.len() + 1 || breaks.first() != Some(&0.0) {
            return Err(argument("breaks must start at 0 and have one more entry than levels"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(argument("breaks must be finite and strictly increasing"));
        }
        if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(domain_error("levels must be finite and >= 0"));
        }
        if levels.windows(2).any(|w| w[1] > w[0]) {
            return Err(domain_error("levels must be nonincreasing"));
        }
        Ok(Self::assemble(breaks, levels))
    }

    fn assemble(breaks: Vec<f64>, levels: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for (i, l) in levels.iter().enumerate() {
            acc += l * (breaks[i + 1] - breaks[i]);
            cumulative.push(acc);
        }
        Self { breaks, levels, cumulative }
    }

    pub fn zero() -> Self {
        Self::assemble(vec![0.0], vec![])
    }

    /// `level` on `[0, support)`.
    pub fn constant(level: f64, support: f64) -> Result<Self> {
        if level == 0.0 || support == 0.0 {
            return Ok(Self::zero());
        }
        Self::new(vec![0.0, support], vec![level])
    }

    /// Decreasing rearrangement of a step function given as
    /// `(level, measure)` cells, in any order.
    pub fn from_cells(input: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut cells: Vec<(f64, f64)> = Vec::new();
        for (level, measure) in input {
            if !(level.is_finite() && level >= 0.0) {
                return Err(domain_error(format!("cell level {level} must be finite and >= 0")));
            }
            if !(measure.is_finite() && measure >= 0.0) {
                return Err(argument(format!("cell measure {measure} must be finite and >= 0")));
            }
            if level > 0.0 && measure > 0.0 {
                cells.push((level, measure));
            }
        }
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breaks = vec![0.0];
        let mut levels: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (level, measure) in cells {
            acc += measure;
            if levels.last() == Some(&level) {
                *breaks.last_mut().expect("nonempty") = acc;
            } else {
                levels.push(level);
                breaks.push(acc);
            }
        }
        Ok(Self::assemble(breaks, levels))
    }

    /// Rearrangement of `n` equal cells of width `1/n` on `[0, 1]`.
    pub fn from_uniform(values: &[f64]) -> Result<Self> {
        let w = 1.0 / values.len() as f64;
        Self::from_cells(values.iter().map(|&v| (v, w)))
    }

    /// Right-derivative step function of the piecewise-linear interpolant
    /// of a concave nondecreasing primitive `k` with `k(0) = 0`, sampled at
    /// the nodes of `grid` (plus the cell `[0, t_N]`).
    pub fn from_primitive(grid: &LogGrid, k: impl Fn(f64) -> f64) -> Result<Self> {
        let mut ts: Vec<f64> = grid.nodes().iter().rev().copied().collect();
        ts.insert(0, 0.0);
        let vals: Vec<f64> = ts.iter().map(|&t| if t == 0.0 { 0.0 } else { k(t) }).collect();
        Self::from_breakpoints(&ts, &vals)
    }

    /// Slopes of the piecewise-linear function through `(ts[i], vals[i])`
    /// with `ts[0] == 0`, `vals[0] == 0`; must be nonincreasing up to a
    /// relative slack of `1e-10`.
    pub fn from_breakpoints(ts: &[f64], vals: &[f64]) -> Result<Self> {
        if ts.len() != vals.len() || ts.len() < 2 || ts[0] != 0.0 {
            return Err(argument("breakpoints must start at 0 with matching values"));
        }
        let mut breaks = vec![0.0];
        let mut levels: Vec<f64> = Vec::new();
        for i in 0..ts.len() - 1 {
            let width = ts[i + 1] - ts[i];
            if !(width > 0.0) {
                return Err(argument("breakpoints must be strictly increasing"));
            }
            let mut slope = (vals[i + 1] - vals[i]) / width;
            if slope < 0.0 {
                if slope < -1e-10 * vals[i + 1].abs().max(1e-300) / width {
                    return Err(domain_error(format!("profile decreases on [{}, {}]", ts[i], ts[i + 1])));
                }
                slope = 0.0;
            }
            if let Some(&prev) = levels.last() {
                if slope > prev {
                    let scale = prev.abs().max(slope.abs());
                    if slope - prev > 1e-10 * scale {
                        return Err(domain_error(format!(
                            "profile is not concave near t = {} (slope {slope} after {prev})",
                            ts[i]
                        )));
                    }
                    slope = prev;
                }
            }
            if levels.last() == Some(&slope) {
                *breaks.last_mut().expect("nonempty") = ts[i + 1];
            } else {
                levels.push(slope);
                breaks.push(ts[i + 1]);
            }
        }
        // trailing zero levels carry no mass
        while levels.last() == Some(&0.0) {
            levels.pop();
            breaks.pop();
        }
        Ok(Self::assemble(breaks, levels))
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Measure of the support.
    pub fn support(&self) -> f64 {
        *self.breaks.last().expect("breaks is never empty")
    }

    /// `(level, start, end)` for every step.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .map(move |(i, &l)| (l, self.breaks[i], self.breaks[i + 1]))
    }

    /// `f*(s)`, right-continuous.
    pub fn value_at(&self, s: f64) -> f64 {
        if s < 0.0 {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        let i = self.breaks.partition_point(|&b| b <= s);
        if i == 0 || i > self.levels.len() {
            0.0
        } else {
            self.levels[i - 1]
        }
    }

    /// `f*(0+)`.
    pub fn sup(&self) -> f64 {
        self.levels.first().copied().unwrap_or(0.0)
    }

    /// `int_0^t f*`.
    pub fn integral_to(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.breaks.partition_point(|&b| b <= t);
        if i > self.levels.len() {
            return *self.cumulative.last().expect("nonempty");
        }
        self.cumulative[i - 1] + self.levels[i - 1] * (t - self.breaks[i - 1])
    }

    /// `int_a^b (f*)^p`.
    pub fn power_integral(&self, a: f64, b: f64, p: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        for (l, lo, hi) in self.cells() {
            let (x, y) = (lo.max(a), hi.min(b));
            if y > x {
                acc += l.powf(p) * (y - x);
            }
            if hi >= b {
                break;
            }
        }
        acc
    }

    pub fn l1(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup();
        }
        self.power_integral(0.0, self.support(), p).powf(1.0 / p)
    }

    /// Measure of `{f* > lambda}`.
    pub fn distribution(&self, lambda: f64) -> f64 {
        self.cells().filter(|(l, _, _)| *l > lambda).map(|(_, lo, hi)| hi - lo).sum()
    }

    /// A nonincreasing step function is its own rearrangement.
    pub fn rearrange(&self) -> Self {
        self.clone()
    }

    /// `c * f*`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c == 0.0 {
            return Ok(Self::zero());
        }
        Self::new(self.breaks.clone(), self.levels.iter().map(|l| l * c).collect())
    }
}

/// Decreasing rearrangement of the cell-wise step approximation of `f`
/// (cell value = mean of the endpoint samples, bottom cell `[0, t_N]`
/// carries `f(t_N)`).
pub fn rearrange(f: &SampledFunction) -> Result<StepRearrangement> {
    if f.measure() != Measure::Lebesgue || f.domain() != Domain::Unit {
        return Err(argument("rearrangement needs a function on (0,1] with measure ds"));
    }
    StepRearrangement::from_cells(f.cells())
}

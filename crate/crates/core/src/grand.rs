//! Grand Lebesgue norms, by definition and by the Fiorenza-Karadzhov
//! formula, and the `L(Log L)^alpha` / K-functional identity on `[0, 1]`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use statrs::function::gamma::{gamma, gamma_ui};

use crate::error::{argument, Result};
use crate::grid::{log_quadrature, power_decay_exponent, tail_estimate, LogGrid, StepRearrangement, DIVERGENT_RATE};
use crate::lattice::LatticeNorm;

/// Exponent `p`, power `alpha` of `epsilon` and the `epsilon`-grid in
/// `(0, p - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrandParams {
    pub p: f64,
    pub alpha: f64,
    eps: Vec<f64>,
}

impl GrandParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        Self::with_points(p, alpha, 512)
    }

    /// `n` points, geometric towards both ends of `(0, p - 1)` (a logistic
    /// map of a uniform grid), the extreme ones `1e-8 (p - 1)` from the ends.
    pub fn with_points(p: f64, alpha: f64, n: usize) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(argument(format!("p must lie in (1, inf), got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(argument(format!("alpha must be positive, got {alpha}")));
        }
        if n < 2 {
            return Err(argument("the epsilon grid needs at least two points"));
        }
        let z = (1e8f64).ln();
        let eps = (0..n)
            .map(|i| {
                let x = -z + 2.0 * z * i as f64 / (n - 1) as f64;
                (p - 1.0) / (1.0 + (-x).exp())
            })
            .collect();
        Ok(Self { p, alpha, eps })
    }

    pub fn eps_grid(&self) -> &[f64] {
        &self.eps
    }

    /// Same parameters on twice as many points.
    pub fn refined(&self) -> Self {
        Self::with_points(self.p, self.alpha, 2 * self.eps.len()).expect("parameters already validated")
    }
}

/// `sup_eps eps^{alpha/(p-eps)} ||f||_{p-eps}` over the grid.
pub fn grand_norm_def(fstar: &StepRearrangement, gp: &GrandParams) -> f64 {
    gp.eps
        .iter()
        .map(|&e| e.powf(gp.alpha / (gp.p - e)) * fstar.lp_norm(gp.p - e))
        .fold(0.0, f64::max)
}

/// `sup_t log(e/t)^{-alpha/p} (int_t^1 f*^p)^{1/p}` over the nodes of `grid`.
pub fn grand_norm_fk(fstar: &StepRearrangement, gp: &GrandParams, grid: &LogGrid) -> f64 {
    grid.nodes()
        .iter()
        .map(|&t| (1.0 - t.ln()).powf(-gp.alpha / gp.p) * fstar.power_integral(t, 1.0, gp.p).powf(1.0 / gp.p))
        .fold(0.0, f64::max)
}

/// Which logarithm weights the `L(Log L)^alpha` side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogConvention {
    /// `1 + log(1/s) = log(e/s)`.
    OnePlusLog,
    /// `log(1/s)`.
    Log,
}

impl LogConvention {
    fn shift(self) -> f64 {
        match self {
            Self::OnePlusLog => 1.0,
            Self::Log => 0.0,
        }
    }
}

/// `int_{x0}^{x1} (c + x)^alpha e^{-x} dx` for `c in {0, 1}`, via the
/// upper incomplete gamma function.
fn log_weight_mass(x0: f64, x1: f64, alpha: f64, c: f64) -> f64 {
    let upper = |x: f64| {
        if x.is_infinite() {
            0.0
        } else if c + x == 0.0 {
            gamma(alpha + 1.0)
        } else {
            gamma_ui(alpha + 1.0, c + x)
        }
    };
    c.exp() * (upper(x0) - upper(x1))
}

fn reaches_resolution(fstar: &StepRearrangement, grid: &LogGrid) -> bool {
    fstar.breaks().get(1).is_some_and(|&b| b <= grid.t_min() * (1.0 + 1e-9))
}

/// `int_0^1 f*(s) L(s)^alpha ds` with `L` the chosen logarithm; exact on
/// every step. When the steps reach the resolution of `grid` the bottom
/// cell is replaced by the tail of the per-cell contributions, which also
/// decides divergence.
pub fn llogl_alpha_norm(fstar: &StepRearrangement, alpha: f64, conv: LogConvention, grid: &LogGrid) -> Result<LatticeNorm> {
    if !(alpha > 0.0) {
        return Err(argument(format!("alpha must be positive, got {alpha}")));
    }
    let c = conv.shift();
    let x_of = |s: f64| if s <= 0.0 { f64::INFINITY } else { -s.min(1.0).ln() };
    let mass = |a: f64, b: f64| log_weight_mass(x_of(b.min(1.0)), x_of(a), alpha, c);
    if !reaches_resolution(fstar, grid) {
        let v = fstar.cells().filter(|(_, a, _)| *a < 1.0).map(|(l, a, b)| l * mass(a, b)).sum();
        return Ok(LatticeNorm::finite(v));
    }
    // contributions of the grid cells [t_{k+1}, t_k], k = 0..N-1
    let nodes = grid.nodes();
    let mut contrib = Vec::with_capacity(nodes.len());
    for w in nodes.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let mut v = 0.0;
        for (l, a, b) in fstar.cells() {
            let (a, b) = (a.max(lo), b.min(hi));
            if b > a {
                v += l * mass(a, b);
            }
        }
        contrib.push(v);
    }
    let h = grid.h();
    let density: Vec<f64> = contrib.iter().map(|v| v / h).collect();
    let (tail, mut divergence) = tail_estimate(&density, h);
    // the weight L^alpha is known exactly: fit the decay of f*(s) s alone
    // and subtract alpha. Fitting the product misreads slowly converging
    // factors such as U / (2 + U)^2 as convergent.
    if divergence.is_none() {
        let bare: Vec<f64> =
            density.iter().enumerate().map(|(k, d)| d / (c + (k as f64 + 0.5) * h).powf(alpha)).collect();
        if let Some(beta) = power_decay_exponent(&bare, h) {
            if beta - alpha < DIVERGENT_RATE {
                divergence = Some(beta - alpha);
            }
        }
    }
    let on_grid: f64 = contrib.iter().sum();
    let last = *contrib.last().unwrap_or(&0.0);
    Ok(match divergence {
        Some(rate) => LatticeNorm { value: f64::INFINITY, truncated_value: on_grid, divergent: true, divergence_rate: Some(rate) },
        None => {
            // the density samples sit at cell midpoints: the fitted tail
            // starts half a cell early
            let v = on_grid + (tail - 0.5 * last).max(0.0);
            LatticeNorm { value: v, truncated_value: on_grid, divergent: false, divergence_rate: None }
        }
    })
}

/// `int_0^1 K(s, f; L^1, L^inf) L(s)^{alpha - 1} ds/s` by log-grid
/// quadrature.
pub fn k_side_llogl(fstar: &StepRearrangement, alpha: f64, conv: LogConvention, grid: &LogGrid) -> Result<LatticeNorm> {
    if !(alpha > 0.0) {
        return Err(argument(format!("alpha must be positive, got {alpha}")));
    }
    let c = conv.shift();
    let h = grid.h();
    let g: Vec<f64> = (0..grid.len())
        .map(|k| fstar.integral_to(grid.node(k)) * (c + grid.u(k)).powf(alpha - 1.0))
        .collect();
    let mut integral = if c == 0.0 && alpha < 1.0 {
        // u^{alpha-1} is singular at u = 0: exact first cell with K(s)
        // frozen at K(1), quadrature from the next node on
        let mut rest = log_quadrature(&g[1..], h);
        rest.value += fstar.integral_to(1.0) * h.powf(alpha) / alpha;
        rest
    } else {
        log_quadrature(&g, h)
    };
    integral.value = integral.value.max(0.0);
    Ok(match integral.divergence {
        Some(rate) => LatticeNorm { value: f64::INFINITY, truncated_value: integral.value, divergent: true, divergence_rate: Some(rate) },
        None => LatticeNorm { value: integral.total(), truncated_value: integral.value, divergent: false, divergence_rate: None },
    })
}

/// Both sides of `<L^1, L^inf>_{0,1} = L Log L` for one `f*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumIdentity {
    pub k_side: LatticeNorm,
    pub llogl_side: LatticeNorm,
}

impl SumIdentity {
    /// Both finite or both divergent.
    pub fn consistent(&self) -> bool {
        self.k_side.divergent == self.llogl_side.divergent
    }

    /// `llogl / K`; `None` unless both sides are finite.
    pub fn ratio(&self) -> Option<f64> {
        (!self.k_side.divergent && !self.llogl_side.divergent && self.k_side.value > 0.0)
            .then(|| self.llogl_side.value / self.k_side.value)
    }
}

pub fn verify_sum_identity(fstar: &StepRearrangement, alpha: f64, conv: LogConvention, grid: &LogGrid) -> Result<SumIdentity> {
    Ok(SumIdentity {
        k_side: k_side_llogl(fstar, alpha, conv, grid)?,
        llogl_side: llogl_alpha_norm(fstar, alpha, conv, grid)?,
    })
}

/// Decreasing rearrangements on `[0, 1]`: constants, an indicator, power
/// and log-power singularities sampled through their primitives on `grid`,
/// and `random` step functions from `seed`.
pub fn rearrangement_corpus(grid: &Arc<LogGrid>, random: usize, seed: u64) -> Vec<(String, StepRearrangement)> {
    let mut out = vec![
        ("one".to_string(), StepRearrangement::constant(1.0, 1.0).expect("valid")),
        ("chi[0,1/e]".to_string(), StepRearrangement::constant(1.0, (-1.0f64).exp()).expect("valid")),
    ];
    for b in [0.25, 0.5] {
        let f = StepRearrangement::from_primitive(grid, |t| t.powf(1.0 - b) / (1.0 - b)).expect("concave primitive");
        out.push((format!("s^-{b}"), f));
    }
    for g in [1.0, 2.0] {
        let e = std::f64::consts::E;
        let f = StepRearrangement::from_primitive(grid, |t| e * gamma_ui(g + 1.0, 1.0 - t.ln())).expect("concave primitive");
        out.push((format!("log(e/s)^{g}"), f));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random {
        let m = rng.random_range(1..=16usize);
        let cells: Vec<(f64, f64)> = (0..m)
            .map(|_| (rng.random_range(-3.0f64..3.0).exp(), rng.random_range(0.0f64..1.0)))
            .collect();
        let total: f64 = cells.iter().map(|c| c.1).sum();
        let f = StepRearrangement::from_cells(cells.into_iter().map(|(l, w)| (l, w / total)))
            .expect("positive levels and measures");
        out.push((format!("steps#{i}"), f));
    }
    out
}

/// `1 / (s log^2(e^2/s))`: in `L^1` but not in `L Log L`. (With `e/s`
/// the function increases on `(1/e, 1)`.)
pub fn llogl_divergent_example(grid: &LogGrid) -> StepRearrangement {
    StepRearrangement::from_primitive(grid, |t| 1.0 / (2.0 - t.ln())).expect("concave primitive")
}

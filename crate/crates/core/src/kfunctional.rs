//! K- and J-functionals of concrete pairs, concave profiles and their
//! realization, and the K-functional of vector-valued functions over a
//! finite measure space.

use std::sync::Arc;

use crate::error::{argument, domain, Result};
use crate::grid::{LogGrid, Measure, SampledFunction, StepRearrangement};

fn positive_t(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(argument(format!("t must be positive, got {t}")))
    }
}

/// `K(t, f; L^1, L^inf) = int_0^t f*`.
pub fn k_l1_linf(t: f64, fstar: &StepRearrangement) -> Result<f64> {
    positive_t(t)?;
    Ok(fstar.integral_to(t))
}

/// `(int_0^{t^p} f*^p)^{1/p}`, the K-functional of `(L^p, L^inf)` up to
/// equivalence.
pub fn k_lp_linf(t: f64, p: f64, fstar: &StepRearrangement) -> Result<f64> {
    positive_t(t)?;
    if !(p >= 1.0) || p.is_infinite() {
        return Err(argument(format!("p must lie in [1, inf), got {p}")));
    }
    if p == 1.0 {
        return Ok(fstar.integral_to(t));
    }
    Ok(fstar.power_integral(0.0, t.powf(p), p).powf(1.0 / p))
}

/// `sup_{s < t} s f*(s)`, the K-functional of `(L^{1,inf}, L^inf)`.
pub fn k_weak_l1_linf(t: f64, fstar: &StepRearrangement) -> Result<f64> {
    positive_t(t)?;
    // s f*(s) increases on each step, so the sup sits at a right end
    Ok(fstar
        .cells()
        .take_while(|(_, lo, _)| *lo < t)
        .map(|(l, _, hi)| l * hi.min(t))
        .fold(0.0, f64::max))
}

/// `J(t, x) = max(||x||_0, t ||x||_1)`.
pub fn j_functional(t: f64, norm0: f64, norm1: f64) -> f64 {
    norm0.max(t * norm1)
}

/// Nonincreasing, nonnegative finite sequence `a*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    astar: Vec<f64>,
    prefix: Vec<f64>,
}

impl SequenceData {
    /// Rearranges `|values|` into nonincreasing order.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("sequence entries must be finite"));
        }
        let mut astar: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        astar.sort_by(|a, b| b.total_cmp(a));
        Ok(Self::assemble(astar))
    }

    /// Takes an already nonincreasing nonnegative sequence.
    pub fn new(astar: Vec<f64>) -> Result<Self> {
        if astar.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("sequence entries must be finite and >= 0"));
        }
        if astar.windows(2).any(|w| w[1] > w[0]) {
            return Err(domain("sequence must be nonincreasing"));
        }
        Ok(Self::assemble(astar))
    }

    fn assemble(astar: Vec<f64>) -> Self {
        let mut prefix = Vec::with_capacity(astar.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for a in &astar {
            acc += a;
            prefix.push(acc);
        }
        Self { astar, prefix }
    }

    pub fn values(&self) -> &[f64] {
        &self.astar
    }

    pub fn len(&self) -> usize {
        self.astar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.astar.is_empty()
    }

    /// `a*_n` for 1-based `n`; zero past the end.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return self.astar.first().copied().unwrap_or(0.0);
        }
        self.astar.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.get(1);
        }
        let top = self.get(1);
        if top == 0.0 {
            return 0.0;
        }
        // scale by the largest entry to keep large p finite
        let s: f64 = self.astar.iter().map(|a| (a / top).powf(p)).sum();
        top * s.powf(1.0 / p)
    }

    /// `sum_{j <= n} a*_j`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.prefix[n.min(self.astar.len())]
    }
}

/// `K(n, a; l^1, l^inf) = sum_{j <= n} a*_j`.
pub fn k_discrete(n: usize, a: &SequenceData) -> Result<f64> {
    if n == 0 {
        return Err(argument("n must be at least 1"));
    }
    Ok(a.partial_sum(n))
}

/// Concave piecewise-linear extension of [`k_discrete`] to real `t >= 0`.
pub fn k_discrete_interp(t: f64, a: &SequenceData) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(argument(format!("t must be >= 0, got {t}")));
    }
    if t >= a.len() as f64 {
        return Ok(a.partial_sum(a.len()));
    }
    let n = t.floor() as usize;
    Ok(a.partial_sum(n) + (t - n as f64) * a.get(n + 1))
}

/// Checks monotonicity, concavity and monotonicity of `K(t)/t` on a sample
/// `(ts, ks)` with `ts` increasing, up to relative slack.
pub fn check_quasi_concave(ts: &[f64], ks: &[f64], slack: f64) -> Result<()> {
    if ts.len() != ks.len() {
        return Err(argument("sample lengths differ"));
    }
    let scale = ks.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 1..ts.len() {
        if ks[i] < ks[i - 1] - slack * scale {
            return Err(domain(format!("profile decreases at t = {}", ts[i])));
        }
        let (r0, r1) = (ks[i - 1] / ts[i - 1], ks[i] / ts[i]);
        if r1 > r0 * (1.0 + slack) + slack * f64::MIN_POSITIVE {
            return Err(domain(format!("K(t)/t increases at t = {}", ts[i])));
        }
    }
    for i in 1..ts.len().saturating_sub(1) {
        let s0 = (ks[i] - ks[i - 1]) / (ts[i] - ts[i - 1]);
        let s1 = (ks[i + 1] - ks[i]) / (ts[i + 1] - ts[i]);
        if s1 > s0 + slack * s0.abs().max(s1.abs()).max(scale) {
            return Err(domain(format!("profile is not concave at t = {}", ts[i])));
        }
    }
    Ok(())
}

/// Concave nondecreasing piecewise-linear function with `K(0) = 0`,
/// constant after its last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiConcaveProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl QuasiConcaveProfile {
    /// `breakpoints` increasing and positive; `values` the profile there.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(argument("profile needs matching, nonempty breakpoints and values"));
        }
        if !(breakpoints[0] > 0.0) || breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(argument("breakpoints must be positive and strictly increasing"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain("profile values must be finite and >= 0"));
        }
        let mut ts = vec![0.0];
        ts.extend_from_slice(&breakpoints);
        let mut ks = vec![0.0];
        ks.extend_from_slice(&values);
        check_quasi_concave(&ts[1..], &ks[1..], 1e-10)?;
        StepRearrangement::from_breakpoints(&ts, &ks)?;
        Ok(Self { breakpoints, values })
    }

    /// Samples `k` at the grid nodes in `(0, 1]`, plateau from `t = 1`.
    pub fn from_fn(grid: &LogGrid, k: impl Fn(f64) -> f64) -> Result<Self> {
        let breakpoints: Vec<f64> = grid.nodes().iter().rev().copied().collect();
        let values = breakpoints.iter().map(|&t| k(t)).collect();
        Self::new(breakpoints, values)
    }

    /// Breakpoints `(t_i, K_i)` joined linearly, `K(0) = 0`; values given
    /// past `t = 1` must repeat `K(1)` up to `1e-12`.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        let (ts, ks): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        Self::new(ts, ks)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Constant value after the last breakpoint.
    pub fn plateau(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&b| b < t);
        if i == self.breakpoints.len() {
            return self.plateau();
        }
        if self.breakpoints[i] == t {
            return self.values[i];
        }
        let (t0, k0) = if i == 0 { (0.0, 0.0) } else { (self.breakpoints[i - 1], self.values[i - 1]) };
        let (t1, k1) = (self.breakpoints[i], self.values[i]);
        k0 + (k1 - k0) * (t - t0) / (t1 - t0)
    }

    /// Values at the grid nodes, measure `ds/s`.
    pub fn sample(&self, grid: &Arc<LogGrid>) -> SampledFunction {
        let values = grid.nodes().iter().map(|&t| self.eval(t)).collect();
        SampledFunction::from_values(grid.clone(), values, Measure::Haar)
            .expect("profile values are finite and nonnegative")
    }
}

/// Element of `(L^1, L^inf)` on `[0, 1]` whose K-functional is the target:
/// the right-derivative of the target on its own breakpoints, zero past
/// `t = 1`.
pub fn realize_conv0(target: &QuasiConcaveProfile) -> Result<StepRearrangement> {
    let k1 = target.eval(1.0);
    for (t, v) in target.breakpoints.iter().zip(&target.values) {
        if *t > 1.0 && (v - k1).abs() > 1e-12 * k1.max(1.0) {
            return Err(domain(format!("target is not constant for t >= 1 (K({t}) = {v}, K(1) = {k1})")));
        }
    }
    let mut ts = vec![0.0];
    let mut ks = vec![0.0];
    for (t, v) in target.breakpoints.iter().zip(&target.values) {
        if *t < 1.0 {
            ts.push(*t);
            ks.push(*v);
        }
    }
    ts.push(1.0);
    ks.push(k1);
    StepRearrangement::from_breakpoints(&ts, &ks)
}

/// Finitely many atoms `w` with weights `mu_w` and nonincreasing densities
/// `k_w`; `K_w(t) = int_0^t k_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValuedInstance {
    weights: Vec<f64>,
    densities: Vec<StepRearrangement>,
}

impl VectorValuedInstance {
    pub fn new(weights: Vec<f64>, densities: Vec<StepRearrangement>) -> Result<Self> {
        if weights.is_empty() || weights.len() != densities.len() {
            return Err(argument("need one density per atom and at least one atom"));
        }
        if weights.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(argument("atom weights must be positive and finite"));
        }
        Ok(Self { weights, densities })
    }

    /// Atoms given by profiles, realized through [`realize_conv0`].
    pub fn from_profiles(weights: Vec<f64>, profiles: &[QuasiConcaveProfile]) -> Result<Self> {
        let densities = profiles.iter().map(realize_conv0).collect::<Result<Vec<_>>>()?;
        Self::new(weights, densities)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn densities(&self) -> &[StepRearrangement] {
        &self.densities
    }

    pub fn atom_k(&self, w: usize, t: f64) -> f64 {
        self.densities[w].integral_to(t)
    }

    fn budget(&self, lambda: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.densities)
            .map(|(m, k)| m * k.distribution(lambda))
            .sum()
    }
}

/// `sup { sum_w mu_w K_w(phi_w) : sum_w mu_w phi_w <= t }` by water-filling
/// on the marginal level `lambda`.
pub fn pisier_k(t: f64, inst: &VectorValuedInstance) -> Result<f64> {
    positive_t(t)?;
    let full: f64 = inst.weights.iter().zip(&inst.densities).map(|(m, k)| m * k.l1()).sum();
    if inst.budget(0.0) <= t {
        return Ok(full);
    }
    let mut lo = 0.0;
    let mut hi = inst.densities.iter().map(|k| k.sup()).fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inst.budget(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // every cell above hi is bought outright; the remaining budget goes to
    // the tied cells whose level sits in (lo, hi]
    let mut spent = 0.0;
    let mut value = 0.0;
    for (m, k) in inst.weights.iter().zip(&inst.densities) {
        let phi = k.distribution(hi);
        spent += m * phi;
        value += m * k.integral_to(phi);
    }
    let tie = inst
        .densities
        .iter()
        .flat_map(|k| k.levels().iter().copied())
        .filter(|&l| l > lo && l <= hi)
        .fold(hi, f64::min);
    Ok(value + tie * (t - spent).max(0.0))
}

/// Same quantity through the rearrangement of `(w, s) -> k_w(s)` on the
/// product space.
pub fn pisier_product_k(t: f64, inst: &VectorValuedInstance) -> Result<f64> {
    positive_t(t)?;
    let psi = StepRearrangement::from_cells(inst.weights.iter().zip(&inst.densities).flat_map(
        |(m, k)| k.cells().map(move |(l, lo, hi)| (l, m * (hi - lo))),
    ))?;
    Ok(psi.integral_to(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(breaks: &[f64], levels: &[f64]) -> StepRearrangement {
        StepRearrangement::new(breaks.to_vec(), levels.to_vec()).unwrap()
    }

    #[test]
    fn l1_linf_examples() {
        let one = step(&[0.0, 1.0], &[1.0]);
        for t in [0.1, 0.5, 1.0, 3.0] {
            assert_eq!(k_l1_linf(t, &one).unwrap(), t.min(1.0));
        }
        let n = 4096;
        let lin: Vec<f64> = (0..n).map(|i| 1.0 - (i as f64 + 0.5) / n as f64).collect();
        let r = StepRearrangement::from_uniform(&lin).unwrap();
        assert!((k_l1_linf(0.5, &r).unwrap() - 0.375).abs() < 1e-12);
        let ind = step(&[0.0, 0.2], &[1.0]);
        assert_eq!(k_l1_linf(2.0, &ind).unwrap(), 0.2);
        assert!(k_l1_linf(0.0, &ind).is_err());
    }

    #[test]
    fn lp_linf_examples() {
        let one = step(&[0.0, 1.0], &[1.0]);
        assert!((k_lp_linf(0.5, 3.0, &one).unwrap() - 0.5).abs() < 1e-15);
        assert!(k_lp_linf(0.5, 0.5, &one).is_err());
        // s^{-1/4} realized from its primitive on a fine grid
        let g = LogGrid::new(1e-14, 64).unwrap();
        let f = StepRearrangement::from_primitive(&g, |t| t.powf(0.75) / 0.75).unwrap();
        let v = k_lp_linf(1.0, 2.0, &f).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-3, "{v}");
    }

    #[test]
    fn weak_l1_examples() {
        let one = step(&[0.0, 1.0], &[1.0]);
        assert_eq!(k_weak_l1_linf(0.4, &one).unwrap(), 0.4);
        let ind = step(&[0.0, 0.2], &[1.0]);
        assert_eq!(k_weak_l1_linf(0.1, &ind).unwrap(), 0.1);
        // 1/s on dyadic cells, capped: s f*(s) <= 1 with the sup 1 at right ends
        let breaks: Vec<f64> = std::iter::once(0.0).chain((0..=40).rev().map(|j| 2f64.powi(-j))).collect();
        let levels: Vec<f64> = breaks[1..].iter().map(|b| 1.0 / b).collect();
        let inv = step(&breaks, &levels);
        for t in [1e-6, 1e-3, 0.5, 1.0, 4.0] {
            let v = k_weak_l1_linf(t, &inv).unwrap();
            assert!((v - 1.0).abs() < 1e-12 || t < 1.0 && (0.5..=1.0).contains(&v), "{t} {v}");
        }
        assert_eq!(k_weak_l1_linf(1.0, &inv).unwrap(), 1.0);
    }

    #[test]
    fn discrete_examples() {
        let a = SequenceData::from_values(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(k_discrete(2, &a).unwrap(), 5.0);
        assert_eq!(k_discrete(10, &a).unwrap(), 6.0);
        assert_eq!(k_discrete_interp(1.5, &a).unwrap(), 4.0);
        let e1 = SequenceData::new(vec![1.0, 0.0, 0.0]).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            assert_eq!(k_discrete_interp(t, &e1).unwrap(), t.min(1.0));
        }
        let n = 1000;
        let h = SequenceData::new((1..=n).map(|j| 1.0 / j as f64).collect()).unwrap();
        let harmonic: f64 = (1..=n).rev().map(|j| 1.0 / j as f64).sum();
        assert!((k_discrete(n, &h).unwrap() - harmonic).abs() < 1e-12);
        assert!(SequenceData::new(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn j_dominates_k() {
        assert_eq!(j_functional(1.0, 2.0, 3.0), 3.0);
        assert_eq!(j_functional(0.5, 2.0, 3.0), 2.0);
        let f = step(&[0.0, 0.1, 0.5], &[4.0, 1.0]);
        let g = LogGrid::default_grid();
        for &t in g.nodes() {
            let j = j_functional(t, f.l1(), f.sup());
            assert!(j >= k_l1_linf(t, &f).unwrap());
        }
    }

    #[test]
    fn conv0_examples() {
        let g = LogGrid::new(1e-12, 32).unwrap();
        let min = QuasiConcaveProfile::piecewise_linear(&[(1.0, 1.0), (5.0, 1.0)]).unwrap();
        let r = realize_conv0(&min).unwrap();
        assert_eq!(r.levels(), &[1.0]);
        assert_eq!(r.support(), 1.0);

        let p = QuasiConcaveProfile::from_fn(&g, |t| t * (1.0 - t.ln())).unwrap();
        let r = realize_conv0(&p).unwrap();
        for (&t, &k) in p.breakpoints().iter().zip(p.values()) {
            assert!((r.integral_to(t) - k).abs() <= 1e-12, "t={t}");
        }
        // level on [t_{k+1}, t_k] lies between -log t_k and -log t_{k+1}
        for k in 1..g.last_index() {
            let (a, b) = (g.node(k + 1), g.node(k));
            let v = r.value_at(0.5 * (a + b));
            assert!(v >= -b.ln() - 1e-9 && v <= -a.ln() + 1e-9);
        }

        let sq = QuasiConcaveProfile::from_fn(&g, f64::sqrt).unwrap();
        let r = realize_conv0(&sq).unwrap();
        let s = 0.3;
        assert!((r.value_at(s) / (0.5 / s.sqrt()) - 1.0).abs() < 0.02);
        assert_eq!(r.value_at(1.5), 0.0);

        assert!(QuasiConcaveProfile::piecewise_linear(&[(0.5, 0.1), (1.0, 1.0)]).is_err());
    }

    fn two_atom_oracle(t: f64, inst: &VectorValuedInstance) -> f64 {
        // objective is concave and piecewise linear in phi_1: enumerate kinks
        let (m1, m2) = (inst.weights()[0], inst.weights()[1]);
        let (k1, k2) = (&inst.densities()[0], &inst.densities()[1]);
        let hi = (t / m1).min(k1.support());
        let mut cand = vec![0.0, hi];
        cand.extend(k1.breaks().iter().copied().filter(|&b| b <= hi));
        for &b in k2.breaks() {
            let phi1 = (t - m2 * b) / m1;
            if (0.0..=hi).contains(&phi1) {
                cand.push(phi1);
            }
        }
        cand.into_iter()
            .map(|p1| m1 * k1.integral_to(p1) + m2 * k2.integral_to(((t - m1 * p1) / m2).max(0.0)))
            .fold(0.0, f64::max)
    }

    #[test]
    fn pisier_examples() {
        let one = step(&[0.0, 1.0], &[1.0]);
        let single = VectorValuedInstance::new(vec![1.0], vec![step(&[0.0, 0.3, 1.0], &[2.0, 0.5])]).unwrap();
        for t in [0.1, 0.3, 0.7, 2.0] {
            let want = single.atom_k(0, t);
            assert!((pisier_k(t, &single).unwrap() - want).abs() < 1e-12);
            assert!((pisier_product_k(t, &single).unwrap() - want).abs() < 1e-12);
        }
        let twin = VectorValuedInstance::new(vec![0.5, 0.5], vec![one.clone(), one]).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert!((pisier_k(t, &twin).unwrap() - t).abs() < 1e-12);
            assert!((pisier_product_k(t, &twin).unwrap() - t).abs() < 1e-12);
            assert!((two_atom_oracle(t, &twin) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn pisier_matches_oracle_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut dens = Vec::new();
            for _ in 0..2 {
                let n = rng.random_range(1..8);
                let mut levels: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..5.0)).collect();
                levels.sort_by(|a, b| b.total_cmp(a));
                let mut widths: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let total: f64 = widths.iter().sum();
                widths.iter_mut().for_each(|w| *w /= total);
                dens.push(StepRearrangement::from_cells(levels.iter().zip(&widths).map(|(l, w)| (*l, *w))).unwrap());
            }
            let inst = VectorValuedInstance::new(vec![rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)], dens).unwrap();
            let t = rng.random_range(0.01..3.0);
            let oracle = two_atom_oracle(t, &inst);
            let wf = pisier_k(t, &inst).unwrap();
            let prod = pisier_product_k(t, &inst).unwrap();
            assert!((wf - oracle).abs() <= 1e-6 * oracle, "{wf} vs {oracle}");
            assert!((prod - oracle).abs() <= 1e-6 * oracle, "{prod} vs {oracle}");
        }
    }
}

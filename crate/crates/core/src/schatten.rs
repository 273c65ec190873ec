//! Dense complex matrices as compact operators: singular values, Schatten
//! and Matsaev norms, the discretized Volterra operator and the sequence
//! lattice norms of ideals defined through singular values.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{argument, Error, Result};
use crate::extrapolate::{p_of_n, seq_extrap_norm};
use crate::kfunctional::SequenceData;
use crate::lattice::SeqLattice;

/// Largest supported dimension.
pub const MAX_DIM: usize = 512;

/// Square complex matrix, column-major, with lazily computed singular
/// values.
#[derive(Debug, Clone)]
pub struct CompactOperator {
    n: usize,
    cols: Vec<Complex64>,
    s: OnceLock<Vec<f64>>,
}

impl PartialEq for CompactOperator {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.cols == other.cols
    }
}

impl CompactOperator {
    /// `rows[i][j]` is the entry in row `i`, column `j`.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(argument("empty matrix"));
        }
        if n > MAX_DIM {
            return Err(argument(format!("dimension {n} exceeds {MAX_DIM}")));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(argument(format!("matrix is not square: {n} rows but a row of length {}", r.len())));
        }
        if rows.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(argument("matrix entries must be finite"));
        }
        let mut cols = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                cols[j * n + i] = *z;
            }
        }
        Ok(Self::from_cols(n, cols))
    }

    fn from_cols(n: usize, cols: Vec<Complex64>) -> Self {
        Self { n, cols, s: OnceLock::new() }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(argument(format!("dimension must lie in 1..={MAX_DIM}, got {n}")));
        }
        let mut cols = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                cols.push(f(i, j));
            }
        }
        Ok(Self::from_cols(n, cols))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::from_fn(d.len(), |i, j| Complex64::new(if i == j { d[i] } else { 0.0 }, 0.0))
    }

    /// `u v^T`.
    pub fn rank_one(u: &[f64], v: &[f64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(argument("rank-one factors must have equal length"));
        }
        Self::from_fn(u.len(), |i, j| Complex64::new(u[i] * v[j], 0.0))
    }

    /// Entries with independent standard normal real and imaginary parts.
    pub fn random_gaussian(n: usize, seed: u64) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            entries.push(Complex64::new(re, im));
        }
        Self::from_fn(n, |i, j| entries[j * n + i])
    }

    /// `f -> int_0^x f` on `n` cells: `1/n` below the diagonal, `1/(2n)` on
    /// it, so that `V + V^*` is `1/n` times the all-ones matrix.
    pub fn volterra(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(argument("the Volterra discretization needs n >= 2"));
        }
        let h = 1.0 / n as f64;
        Self::from_fn(n, |i, j| {
            Complex64::new(
                match i.cmp(&j) {
                    std::cmp::Ordering::Greater => h,
                    std::cmp::Ordering::Equal => 0.5 * h,
                    std::cmp::Ordering::Less => 0.0,
                },
                0.0,
            )
        })
    }

    /// Rows separated by newlines, entries by `;`, each entry `re,im` (or
    /// a bare real number).
    pub fn parse_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                line.split(';')
                    .map(str::trim)
                    .filter(|e| !e.is_empty())
                    .map(parse_entry)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.cols[j * self.n + i]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.entry(j, i).conj()).expect("same dimension")
    }

    /// `a A + b B`.
    pub fn combine(a: Complex64, x: &Self, b: Complex64, y: &Self) -> Result<Self> {
        if x.n != y.n {
            return Err(argument("dimension mismatch"));
        }
        Ok(Self::from_cols(x.n, x.cols.iter().zip(&y.cols).map(|(p, q)| a * p + b * q).collect()))
    }

    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(argument("dimension mismatch"));
        }
        let n = self.n;
        let mut cols = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in 0..n {
                let b = other.cols[j * n + k];
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    cols[j * n + i] += self.cols[k * n + i] * b;
                }
            }
        }
        Ok(Self::from_cols(n, cols))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.entry(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.cols.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Singular values, nonincreasing.
    pub fn s_numbers(&self) -> &[f64] {
        self.s.get_or_init(|| one_sided_jacobi(self.n, self.cols.clone()))
    }

    /// `(sum s_j^p)^{1/p}`; `s_1` for `p = inf`.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        schatten_of(self.s_numbers(), p)
    }

    /// `sup_n (sum_{j <= n} s_j) / log^alpha(e n)`.
    pub fn matsaev_norm(&self, alpha: f64) -> Result<f64> {
        matsaev_of(self.s_numbers(), alpha)
    }

    /// `sup_{1 < p < p0} (p - 1)^alpha ||M||_p` on 256 points geometric in
    /// `p - 1` over `[1e-6, p0 - 1]`.
    pub fn matsaev_extrap(&self, alpha: f64, p0: f64) -> Result<f64> {
        matsaev_extrap_of(self.s_numbers(), alpha, p0, 256)
    }

    /// `(Re M, Im M) = ((M + M^*)/2, (M - M^*)/(2i))`, both Hermitian.
    pub fn components(&self) -> (Self, Self) {
        let adj = self.adjoint();
        let half = Complex64::new(0.5, 0.0);
        let re = Self::combine(half, self, half, &adj).expect("same dimension");
        let k = Complex64::new(0.0, -0.5);
        let im = Self::combine(k, self, -k, &adj).expect("same dimension");
        (re, im)
    }
}

fn parse_entry(e: &str) -> Result<Complex64> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|err| Error::Parse(format!("bad matrix entry {e:?}: {err}")));
    match e.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(num(re)?, num(im)?)),
        None => Ok(Complex64::new(num(e)?, 0.0)),
    }
}

/// One-sided (Hestenes) Jacobi: plane rotations of column pairs until all
/// columns are mutually orthogonal; this diagonalizes `M^* M` without
/// forming it, so small singular values keep full relative accuracy.
fn one_sided_jacobi(n: usize, mut a: Vec<Complex64>) -> Vec<f64> {
    const TOL: f64 = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for k in 0..n {
                    let x = a[i * n + k];
                    let y = a[j * n + k];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma / g;
                for k in 0..n {
                    let x = a[i * n + k];
                    let y = a[j * n + k];
                    a[i * n + k] = x * c - y * (phase.conj() * s);
                    a[j * n + k] = x * (phase * s) + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| a[j * n..(j + 1) * n].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn schatten_of(s: &[f64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(argument(format!("Schatten exponent must be >= 1, got {p}")));
    }
    let top = s.first().copied().unwrap_or(0.0);
    if p.is_infinite() || top == 0.0 {
        return Ok(top);
    }
    Ok(top * s.iter().map(|x| (x / top).powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn matsaev_of(s: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(argument(format!("alpha must be >= 0, got {alpha}")));
    }
    let mut acc = 0.0;
    let mut best = 0.0f64;
    for (j, x) in s.iter().enumerate() {
        acc += x;
        best = best.max(acc / (1.0 + ((j + 1) as f64).ln()).powf(alpha));
    }
    Ok(best)
}

pub fn matsaev_extrap_of(s: &[f64], alpha: f64, p0: f64, points: usize) -> Result<f64> {
    if !(p0 > 1.0) {
        return Err(argument(format!("p0 must exceed 1, got {p0}")));
    }
    let (lo, hi) = (1e-6f64.ln(), (p0 - 1.0).ln());
    if hi <= lo {
        return Err(argument("p0 - 1 must exceed 1e-6"));
    }
    let mut best = 0.0f64;
    for i in 0..points {
        let pm1 = (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp();
        best = best.max(pm1.powf(alpha) * schatten_of(s, 1.0 + pm1)?);
    }
    Ok(best)
}

/// `||{sum_{j <= n} s_j}_n||_{F_d}`.
pub fn ideal_norm_via_f(s: &[f64], lattice: &SeqLattice) -> f64 {
    let mut acc = 0.0;
    let k: Vec<f64> = s
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    lattice.norm(&k)
}

/// `||{||T||_{p(n)}}_n||_{F_d}`, `n` up to the number of s-numbers.
pub fn ideal_extrap(s: &[f64], lattice: &SeqLattice) -> Result<f64> {
    let a = SequenceData::new(s.to_vec())?;
    Ok(seq_extrap_norm(&a, lattice)?.l_side)
}

/// `||{(1/log(en)) sum_{j <= n} s_j}_n||_{F_d}`.
pub fn xlog_norm(s: &[f64], lattice: &SeqLattice) -> f64 {
    let mut acc = 0.0;
    let k: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(j, x)| {
            acc += x;
            acc / (1.0 + ((j + 1) as f64).ln())
        })
        .collect();
    lattice.norm(&k)
}

/// The Matsaev-theorem chain for one operator `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsaevChain {
    /// `xlog_norm(T_R) / ideal_extrap(T_J)`.
    pub realized: f64,
    /// `xlog_norm(T_R) / ideal_norm_via_f(T_J)`.
    pub realized_via_k: f64,
    /// Worst `||T_R||_{p(n)} / (max(p/(p-1), p) ||T_J||_{p(n)})` over `n`;
    /// at most 1 when the Matsaev inequality holds along `p(n)`.
    pub pointwise: f64,
}

pub fn matsaev_chain(t: &CompactOperator, lattice: &SeqLattice) -> Result<MatsaevChain> {
    let (re, im) = t.components();
    let (sr, sj) = (re.s_numbers(), im.s_numbers());
    let lhs = xlog_norm(sr, lattice);
    let mut pointwise = 0.0f64;
    for n in 1..=t.dim() {
        let p = p_of_n(n as f64)?;
        let c = (p / (p - 1.0)).max(p);
        let r = schatten_of(sr, p)? / (c * schatten_of(sj, p)?);
        pointwise = pointwise.max(r);
    }
    Ok(MatsaevChain {
        realized: lhs / ideal_extrap(sj, lattice)?,
        realized_via_k: lhs / ideal_norm_via_f(sj, lattice),
        pointwise,
    })
}

/// `sup_n a_{n^2} / log(en)` over `sup_n a_n / log(en)` for the given
/// nondecreasing sequence (`a[0]` is `a_1`).
pub fn square_transfer_ratio(a: &[f64]) -> f64 {
    let lat = SeqLattice::matsaev(1.0);
    let sq: Vec<f64> = (1..).map(|n: usize| n * n).take_while(|&m| m <= a.len()).map(|m| a[m - 1]).collect();
    lat.norm(&sq) / lat.norm(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn diagonal_and_rank_one() {
        let d = CompactOperator::diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let s = d.s_numbers();
        assert!(close(s[0], 3.0, 1e-14) && close(s[1], 2.0, 1e-14) && close(s[2], 1.0, 1e-14));
        let u = [1.0, 2.0, 2.0];
        let v = [0.0, 3.0, 4.0];
        let r = CompactOperator::rank_one(&u, &v).unwrap();
        let s = r.s_numbers();
        assert!(close(s[0], 15.0, 1e-13));
        assert!(s[1] < 1e-13 && s[2] < 1e-13);
        assert!(CompactOperator::from_rows(&[vec![Complex64::new(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn frobenius_identity_and_unitary_invariance() {
        let m = CompactOperator::random_gaussian(24, 5).unwrap();
        let s = m.s_numbers();
        let f2: f64 = s.iter().map(|x| x * x).sum();
        assert!(close(f2, m.frobenius().powi(2), 1e-10));
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        // conjugate by a unitary from the Q of the Hermitian part's rotation:
        // use a permutation with phases, which is unitary
        let n = 24;
        let u = CompactOperator::from_fn(n, |i, j| {
            if j == (i + 5) % n {
                Complex64::from_polar(1.0, i as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let c = u.product(&m).unwrap().product(&u.adjoint()).unwrap();
        for (a, b) in s.iter().zip(c.s_numbers()) {
            assert!((a - b).abs() < 1e-8 * s[0]);
        }
        assert!(close(m.schatten_norm(2.0).unwrap(), m.frobenius(), 1e-10));
    }

    // continuous Volterra operator: s_j = 2 / ((2j - 1) pi)
    #[test]
    fn volterra_tracks_continuous_spectrum() {
        let v = CompactOperator::volterra(128).unwrap();
        let s = v.s_numbers();
        for j in 1..=20 {
            let want = 2.0 / ((2 * j - 1) as f64 * std::f64::consts::PI);
            assert!((s[j - 1] / want - 1.0).abs() < 0.03, "j={j}: {} vs {want}", s[j - 1]);
        }
    }

    #[test]
    fn volterra_components() {
        let v = CompactOperator::volterra(64).unwrap();
        let (re, im) = v.components();
        let s = re.s_numbers();
        assert!((s[0] - 0.5).abs() < 1e-10);
        assert!(s[1] < 1e-10);
        let skew = CompactOperator::combine(Complex64::new(1.0, 0.0), &im, Complex64::new(-1.0, 0.0), &im.adjoint()).unwrap();
        assert!(skew.frobenius() <= 1e-14);
        for p in [1.1f64, 1.5, 2.0, 3.0] {
            let c = (p / (p - 1.0)).max(p);
            assert!(re.schatten_norm(p).unwrap() <= c * im.schatten_norm(p).unwrap());
        }
    }

    #[test]
    fn matsaev_norms() {
        let e1 = CompactOperator::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e1.matsaev_norm(1.0).unwrap(), 1.0);
        assert_eq!(e1.schatten_norm(1.5).unwrap(), 1.0);
        let x = e1.matsaev_extrap(1.0, 2.0).unwrap();
        assert!(close(x, 1.0, 1e-12));
        let harmonic: Vec<f64> = (1..=200).map(|j| 1.0 / j as f64).collect();
        let h = CompactOperator::diagonal(&harmonic).unwrap();
        assert!(close(h.matsaev_norm(1.0).unwrap(), 1.0, 1e-12));
        let r = h.matsaev_extrap(1.0, 2.0).unwrap();
        assert!(r > 0.3 && r < 3.0, "{r}");
        assert!(h.matsaev_norm(0.5).unwrap() <= h.schatten_norm(1.0).unwrap());
    }

    #[test]
    fn trace_duality() {
        for seed in 0..5 {
            let a = CompactOperator::random_gaussian(10, seed).unwrap();
            let b = CompactOperator::random_gaussian(10, seed + 100).unwrap();
            let tr = a.product(&b).unwrap().trace().norm();
            assert!(tr <= a.schatten_norm(2.0).unwrap() * b.schatten_norm(2.0).unwrap());
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = CompactOperator::parse_csv("1,0; 0,1\n2; -1,0.5\n").unwrap();
        assert_eq!(m.entry(0, 1), Complex64::new(0.0, 1.0));
        assert_eq!(m.entry(1, 0), Complex64::new(2.0, 0.0));
        assert!(CompactOperator::parse_csv("1;2\n3\n").is_err());
        assert!(matches!(CompactOperator::parse_csv("x,1"), Err(Error::Parse(_))));
    }

    #[test]
    fn chain_and_transfer() {
        let v = CompactOperator::volterra(64).unwrap();
        let c = matsaev_chain(&v, &SeqLattice::matsaev(1.0)).unwrap();
        assert!(c.pointwise <= 1.0 && c.realized.is_finite() && c.realized > 0.0);
        let a: Vec<f64> = (1..=400).map(|n| (n as f64).sqrt()).collect();
        let r = square_transfer_ratio(&a);
        assert!(r > 0.0 && r.is_finite());
    }
}

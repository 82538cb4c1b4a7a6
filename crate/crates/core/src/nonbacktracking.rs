//! The weighted non-backtracking matrix `B`, its spectrum, the matrices
//! `M(lambda)` and `M0`, and the Watanabe–Fukumizu determinant identity.
//!
//! Directed edges are indexed lexicographically by `(i, j)`, which is the
//! slot order of the graph's CSR rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigpairs, EigenConfig};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::matrices::{bethe_hessian_complex, bethe_hessian_generic};
use crate::rng::{stream_rng, streams};

/// Default limit on `2|E|` for dense constructions.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Directed edges `(i, j, w_ij)` in index order.
pub fn directed_edges(w: &WeightedGraph) -> Vec<(usize, usize, f64)> {
    (0..w.n()).flat_map(|i| w.neighbors(i).map(move |(j, v)| (i, j, v))).collect()
}

/// Index of the reverse of each directed edge.
fn reverse_index(w: &WeightedGraph) -> Vec<usize> {
    let (rp, col, _) = w.csr();
    let mut rev = vec![0; col.len()];
    for i in 0..w.n() {
        for s in rp[i]..rp[i + 1] {
            let j = col[s];
            let r = rp[j] + col[rp[j]..rp[j + 1]].binary_search(&i).expect("symmetric CSR");
            rev[s] = r;
        }
    }
    rev
}

/// `B_{(ij),(kl)} = delta_jk (1 - delta_il) w_kl`, dense.
pub fn nonbacktracking(w: &WeightedGraph, cap: usize) -> Result<DMatrix<f64>> {
    let m = 2 * w.num_edges();
    if m > cap {
        return Err(Error::TooLarge { size: m, cap });
    }
    let (rp, col, val) = w.csr();
    let mut b = DMatrix::zeros(m, m);
    for i in 0..w.n() {
        for e in rp[i]..rp[i + 1] {
            let j = col[e];
            for f in rp[j]..rp[j + 1] {
                if col[f] != i {
                    b[(e, f)] = val[f];
                }
            }
        }
    }
    Ok(b)
}

/// Matrix-free `B`.
pub struct NonBacktrackingOperator<'a> {
    g: &'a WeightedGraph,
    rev: Vec<usize>,
}

impl<'a> NonBacktrackingOperator<'a> {
    pub fn new(g: &'a WeightedGraph) -> Self {
        Self { g, rev: reverse_index(g) }
    }

    pub fn dim(&self) -> usize {
        2 * self.g.num_edges()
    }

    /// `y = B x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (rp, col, val) = self.g.csr();
        let n = self.g.n();
        // s_j = sum over l in the neighbourhood of j of w_jl x_(j->l)
        let mut s = vec![0.0; n];
        for (j, sj) in s.iter_mut().enumerate() {
            *sj = (rp[j]..rp[j + 1]).map(|f| val[f] * x[f]).sum();
        }
        for i in 0..n {
            for e in rp[i]..rp[i + 1] {
                let j = col[e];
                let back = self.rev[e];
                y[e] = s[j] - val[back] * x[back];
            }
        }
    }
}

/// Largest-modulus eigenvalue of `B` by power iteration, assuming it is
/// real and positive and strictly dominant.
pub fn leading_eigenvalue(w: &WeightedGraph, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
    let op = NonBacktrackingOperator::new(w);
    let m = op.dim();
    if m == 0 {
        return Err(Error::EmptyGraph("B has no entries".into()));
    }
    let mut rng = stream_rng(seed, streams::EIGEN_START);
    // a positive start vector has overlap with the Perron direction
    let mut x: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>()).collect();
    let mut y = vec![0.0; m];
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 0..max_iter {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        op.apply(&x, &mut y);
        let lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        std::mem::swap(&mut x, &mut y);
        change = (lambda - prev).abs();
        if it > 10 && change <= tol * lambda.abs().max(1.0) {
            return Ok(lambda);
        }
        prev = lambda;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: change })
}

/// Values predicted for a graph with weights `omega`: `c E[w]`,
/// `E[w^2]/E[w]` and the bulk radius `sqrt(c E[w^2])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPrediction {
    pub leading: f64,
    pub inner: f64,
    pub radius: f64,
}

pub fn predicted_positions(w: &WeightedGraph) -> SpectrumPrediction {
    let c = w.avg_degree();
    let m = w.num_edges().max(1) as f64;
    let m1 = w.edges().iter().map(|e| e.2).sum::<f64>() / m;
    let m2 = w.edges().iter().map(|e| e.2 * e.2).sum::<f64>() / m;
    SpectrumPrediction { leading: c * m1, inner: m2 / m1, radius: (c * m2).sqrt() }
}

/// Eigenvalues of `B` sorted into leading, inner real and bulk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub leading: Complex64,
    /// Largest positive real eigenvalue below `0.95 * bulk_radius_empirical`,
    /// other than the leading one.
    pub inner_real: Option<Complex64>,
    /// Largest modulus among the non-real eigenvalues.
    pub bulk_radius_empirical: f64,
    pub all_eigs: Vec<Complex64>,
    pub prediction: SpectrumPrediction,
}

pub fn is_real(z: Complex64) -> bool {
    z.im.abs() < 1e-8 * z.norm()
}

impl SpectrumReport {
    pub fn from_eigenvalues(all_eigs: Vec<Complex64>, prediction: SpectrumPrediction) -> Result<Self> {
        let lead_idx = (0..all_eigs.len())
            .max_by(|&a, &b| all_eigs[a].norm().total_cmp(&all_eigs[b].norm()))
            .ok_or_else(|| Error::EmptyGraph("B has no eigenvalues".into()))?;
        let leading = all_eigs[lead_idx];
        let bulk_radius_empirical = all_eigs.iter().filter(|z| z.im.abs() > 1e-8).map(|z| z.norm()).fold(0.0, f64::max);
        let inner_real = all_eigs
            .iter()
            .enumerate()
            .filter(|(k, z)| *k != lead_idx && is_real(**z) && z.re > 0.0 && z.re < 0.95 * bulk_radius_empirical)
            .map(|(_, z)| *z)
            .max_by(|a, b| a.re.total_cmp(&b.re));
        Ok(Self { leading, inner_real, bulk_radius_empirical, all_eigs, prediction })
    }

    pub fn kind(&self, z: Complex64) -> &'static str {
        if z == self.leading {
            "leading"
        } else if Some(z) == self.inner_real {
            "inner"
        } else {
            "bulk"
        }
    }

    /// CSV with columns `re,im,kind`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,kind\n");
        for z in &self.all_eigs {
            s.push_str(&format!("{},{},{}\n", z.re, z.im, self.kind(*z)));
        }
        s
    }

    /// Fraction of non-real eigenvalues with modulus at most `radius`.
    pub fn complex_fraction_within(&self, radius: f64) -> f64 {
        let cplx: Vec<&Complex64> = self.all_eigs.iter().filter(|z| z.im.abs() > 1e-8).collect();
        if cplx.is_empty() {
            return 1.0;
        }
        cplx.iter().filter(|z| z.norm() <= radius).count() as f64 / cplx.len() as f64
    }
}

/// Full spectrum of `B` by a dense eigensolve.
#[allow(non_snake_case)]
pub fn full_spectrum_B(w: &WeightedGraph, cap: usize) -> Result<SpectrumReport> {
    let b = nonbacktracking(w, cap)?;
    let eigs: Vec<Complex64> = b.complex_eigenvalues().iter().copied().collect();
    SpectrumReport::from_eigenvalues(eigs, predicted_positions(w))
}

/// Number of negative eigenvalues of `H(x)`, counted among its `k`
/// smallest. Errors if all `k` are negative.
fn negative_count(w: &WeightedGraph, x: f64, k: usize, cfg: &EigenConfig) -> Result<usize> {
    let h = bethe_hessian_generic(w, x)?;
    let k = k.min(h.n());
    let pairs = smallest_eigpairs(&h, k, cfg)?;
    let neg = pairs.iter().filter(|p| p.value < 0.0).count();
    if neg == k && k < h.n() {
        return Err(Error::InvalidParameter(format!("H({x}) has at least {k} negative eigenvalues")));
    }
    Ok(neg)
}

/// Real eigenvalues of `B` in `(lo, hi)`, descending, with
/// `lo >= max|w|` so that `H(x)` has no poles on the interval.
///
/// By the Watanabe–Fukumizu identity these are the points where the
/// inertia of `H(x)` changes; the interval is scanned on `steps` points and
/// each change is bisected to relative precision `1e-10`. `H(x)` must have
/// fewer than `k` negative eigenvalues throughout.
pub fn real_eigenvalues_on_interval(
    w: &WeightedGraph,
    lo: f64,
    hi: f64,
    steps: usize,
    k: usize,
    cfg: &EigenConfig,
) -> Result<Vec<f64>> {
    scan_real_axis(w, lo, hi, steps, k, cfg, usize::MAX)
}

fn scan_real_axis(
    w: &WeightedGraph,
    lo: f64,
    hi: f64,
    steps: usize,
    k: usize,
    cfg: &EigenConfig,
    max_roots: usize,
) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Ok(Vec::new());
    }
    let wmax = w.max_abs_weight();
    if !(lo > wmax) || !(hi > lo) {
        return Err(Error::InvalidParameter(format!("need max|w| = {wmax} < lo = {lo} < hi = {hi}")));
    }
    let mut roots = Vec::new();
    let mut x_prev = hi;
    let mut n_prev = negative_count(w, hi, k, cfg)?;
    for s in 1..=steps {
        let x = hi - (hi - lo) * s as f64 / steps as f64;
        let n_here = negative_count(w, x, k, cfg)?;
        if n_here != n_prev {
            let (mut a, mut b) = (x, x_prev);
            while (b - a) > 1e-10 * b {
                let mid = 0.5 * (a + b);
                if negative_count(w, mid, k, cfg)? == n_prev {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            roots.push(0.5 * (a + b));
            if roots.len() >= max_roots {
                break;
            }
        }
        x_prev = x;
        n_prev = n_here;
    }
    Ok(roots)
}

/// The inner real eigenvalue without forming `B`: the largest real
/// eigenvalue in `(max|w|, 0.95 sqrt(c E[w^2]))`. The scan runs downwards
/// and stops at the first root, so `H(x)` is never formed close to its poles
/// unless the root itself is there.
pub fn inner_real_eigenvalue(w: &WeightedGraph, steps: usize, cfg: &EigenConfig) -> Result<Option<f64>> {
    let pred = predicted_positions(w);
    let lo = w.max_abs_weight() * (1.0 + 1e-6) + 1e-9;
    let hi = 0.95 * pred.radius;
    if hi <= lo {
        return Ok(None);
    }
    Ok(scan_real_axis(w, lo, hi, steps, 6, cfg, 1)?.first().copied())
}

/// `M0 = [[W, -I], [s I, 0]]` for a dense symmetric `W`.
pub fn m0_from_dense(wd: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let n = wd.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(wd);
    for i in 0..n {
        m[(i, n + i)] = -1.0;
        m[(n + i, i)] = s;
    }
    m
}

/// `M0` with `s = c * second_moment`, `c` the average degree of `w`.
#[allow(non_snake_case)]
pub fn build_M0(w: &WeightedGraph, second_moment: f64, cap: usize) -> Result<DMatrix<f64>> {
    if 2 * w.n() > cap {
        return Err(Error::TooLarge { size: 2 * w.n(), cap });
    }
    let wd = DMatrix::from_row_slice(w.n(), w.n(), &w.to_dense());
    Ok(m0_from_dense(&wd, w.avg_degree() * second_moment))
}

/// `(mu ± sqrt(mu^2 - 4 s)) / 2` for every `mu`.
pub fn m0_eigenvalues_closed_form(mu: &[f64], s: f64) -> Vec<Complex64> {
    mu.iter()
        .flat_map(|&m| {
            let d = Complex64::new(m * m - 4.0 * s, 0.0).sqrt();
            [(m + d) / 2.0, (m - d) / 2.0]
        })
        .collect()
}

/// `F_ij(lambda) = -delta_ij sum_k w_ik^4/(lambda^2 - w_ik^2) + lambda w_ij^3/(lambda^2 - w_ij^2)`.
pub fn f_matrix(w: &WeightedGraph, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let n = w.n();
    let l2 = lambda * lambda;
    let mut f = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for &(i, j, o) in w.edges() {
        let den = l2 - o * o;
        if den.norm() <= 1e-14 * l2.norm().max(o * o) {
            return Err(Error::Pole { x2: l2.norm() });
        }
        let d = o.powi(4) / den;
        f[(i, i)] -= d;
        f[(j, j)] -= d;
        let off = lambda * o.powi(3) / den;
        f[(i, j)] = off;
        f[(j, i)] = off;
    }
    Ok(f)
}

/// `M(lambda) = [[W, -I], [D_W - F(lambda), 0]]` with `D_W = diag(sum_k w_ik^2)`.
#[allow(non_snake_case)]
pub fn build_M_of_lambda(w: &WeightedGraph, lambda: Complex64, cap: usize) -> Result<DMatrix<Complex64>> {
    let n = w.n();
    if 2 * n > cap {
        return Err(Error::TooLarge { size: 2 * n, cap });
    }
    if lambda.norm() < 1.0 {
        return Err(Error::InvalidParameter(format!("|lambda| = {} < 1", lambda.norm())));
    }
    let f = f_matrix(w, lambda)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut m = DMatrix::from_element(2 * n, 2 * n, zero);
    for &(i, j, o) in w.edges() {
        m[(i, j)] = o.into();
        m[(j, i)] = o.into();
    }
    for i in 0..n {
        m[(i, n + i)] = Complex64::new(-1.0, 0.0);
        let dw: f64 = w.neighbors(i).map(|(_, o)| o * o).sum();
        for j in 0..n {
            m[(n + i, j)] = -f[(i, j)];
        }
        m[(n + i, i)] += dw;
    }
    Ok(m)
}

/// `ln det A` (principal branch per factor) from an LU factorization;
/// `-inf` real part for a singular matrix.
/// Eigenvalue of `a` closest to `shift`, by shifted inverse iteration.
/// Returns `shift` itself when `a - shift I` is exactly singular.
pub fn nearest_eigenvalue(a: &DMatrix<Complex64>, shift: Complex64, tol: f64, max_iter: usize) -> Result<Complex64> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Dimension { expected: n, got: a.ncols() });
    }
    let mut s = a.clone();
    for i in 0..n {
        s[(i, i)] -= shift;
    }
    let lu = s.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
    v /= Complex64::from(v.norm());
    let mut mu = shift;
    for it in 0..max_iter {
        let Some(y) = lu.solve(&v) else { return Ok(shift) };
        let theta = v.dotc(&y);
        if theta.norm() == 0.0 || !theta.is_finite() {
            return Ok(shift);
        }
        let next = shift + theta.inv();
        let ny = y.norm();
        v = y / Complex64::from(ny);
        if it > 0 && (next - mu).norm() <= tol * next.norm().max(1.0) {
            return Ok(next);
        }
        mu = next;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: f64::NAN })
}

pub fn log_det(a: DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let lu = a.lu();
    let sign: Complex64 = lu.p().determinant();
    let u = lu.u();
    let mut acc = if sign.re < 0.0 { Complex64::new(0.0, std::f64::consts::PI) } else { Complex64::new(0.0, 0.0) };
    for i in 0..n {
        let d = u[(i, i)];
        if d == Complex64::new(0.0, 0.0) {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        acc += d.ln();
    }
    acc
}

/// `|lhs - rhs| / max(|lhs|, |rhs|, 1)` for
/// `det(xI - B) = det H(x) prod_(ij) (x^2 - w_ij^2)`, evaluated in log space.
pub fn watanabe_fukumizu_residual(w: &WeightedGraph, x: Complex64, cap: usize) -> Result<f64> {
    let (l1, l2) = watanabe_fukumizu_logs(w, x, cap)?;
    let m = l1.re.max(l2.re);
    if m == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let a = (l1 - m).exp();
    let b = (l2 - m).exp();
    let floor = (-m).exp();
    Ok((a - b).norm() / a.norm().max(b.norm()).max(floor))
}

/// `(ln det(xI - B), ln det H(x) + sum ln(x^2 - w^2))`.
pub fn watanabe_fukumizu_logs(w: &WeightedGraph, x: Complex64, cap: usize) -> Result<(Complex64, Complex64)> {
    let h = bethe_hessian_complex(w, x)?;
    let b = nonbacktracking(w, cap)?;
    let m = b.nrows();
    let mut a = b.map(|v| Complex64::new(-v, 0.0));
    for i in 0..m {
        a[(i, i)] += x;
    }
    let lhs = if m == 0 { Complex64::new(0.0, 0.0) } else { log_det(a) };
    let mut rhs = if w.n() == 0 { Complex64::new(0.0, 0.0) } else { log_det(h) };
    for &(_, _, o) in w.edges() {
        rhs += (x * x - o * o).ln();
    }
    Ok((lhs, rhs))
}

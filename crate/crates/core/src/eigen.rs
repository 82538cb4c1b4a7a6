//! Extremal eigenpairs of symmetric operators: thick-restart Lanczos with
//! full reorthogonalization, and a dense path for small problems.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::sparse::SparseSymmetricMatrix;

/// A symmetric linear map `x -> A x`.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for SparseSymmetricMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

struct Negated<'a, O: ?Sized>(&'a O);

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for Negated<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
        for v in y.iter_mut() {
            *v = -*v;
        }
    }
}

/// Eigenvalue, unit eigenvector and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||A x - value x||`.
    pub residual: f64,
    /// Operator applications used (0 on the dense path).
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Residual tolerance, relative to `max(1, |value|)`.
    pub tol: f64,
    pub max_matvecs: usize,
    pub krylov_dim: usize,
    pub seed: u64,
    /// Problems of at most this dimension are solved densely.
    pub dense_threshold: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_matvecs: 100_000, krylov_dim: 64, seed: 0, dense_threshold: 500 }
    }
}

impl EigenConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// All eigenvalues ascending, with eigenvectors as matching columns.
pub fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Dense matrix of an operator, one column per unit vector.
pub fn operator_to_dense(op: &(impl SymmetricOperator + ?Sized)) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut y);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = y[i];
        }
    }
    // symmetrize away rounding asymmetry
    let t = m.transpose();
    (m + t) * 0.5
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Fixes the sign so that the entry of largest magnitude is positive.
fn canonical_sign(x: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &v in x.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

fn residual(op: &(impl SymmetricOperator + ?Sized), value: f64, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    axpy(-value, x, &mut y);
    norm(&y)
}

fn dense_smallest(op: &(impl SymmetricOperator + ?Sized), k: usize) -> Vec<EigenPair> {
    let (values, vectors) = symmetric_eigen_sorted(operator_to_dense(op));
    (0..k)
        .map(|i| {
            let mut v: Vec<f64> = vectors.column(i).iter().copied().collect();
            canonical_sign(&mut v);
            let res = residual(op, values[i], &v);
            EigenPair { value: values[i], vector: v, residual: res, iterations: 0 }
        })
        .collect()
}

fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64], coef: &mut [f64]) {
    for _ in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let d = dot(v, w);
            coef[i] += d;
            axpy(-d, v, w);
        }
    }
}

fn random_unit_orthogonal<R: Rng>(rng: &mut R, basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut scratch = vec![0.0; basis.len()];
        orthogonalize(basis, &mut w, &mut scratch);
        let nw = norm(&w);
        if nw > 1e-8 {
            w.iter_mut().for_each(|v| *v /= nw);
            return w;
        }
    }
}

/// The `k` algebraically smallest eigenpairs, ascending.
///
/// Converged pairs satisfy `||A x - value x|| <= tol * max(1, |value|)`, or
/// `1e3 eps ||A||` when that is larger.
/// Eigenvalues of multiplicity greater than one may be reported once.
pub fn smallest_eigpairs(
    op: &(impl SymmetricOperator + ?Sized),
    k: usize,
    cfg: &EigenConfig,
) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cannot compute {k} eigenpairs of a {n}x{n} operator")));
    }
    if n <= cfg.dense_threshold.max(k + 2) {
        return Ok(dense_smallest(op, k));
    }
    let m = cfg.krylov_dim.max(2 * k + 10).min(n);
    let keep_after_restart = (m / 2).max(k + 1).min(m - 1);
    let mut rng = stream_rng(cfg.seed, streams::EIGEN_START);

    let mut basis: Vec<Vec<f64>> = vec![random_unit_orthogonal(&mut rng, &[], n)];
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut start = 0;
    let mut matvecs = 0;
    let mut w = vec![0.0; n];
    loop {
        let mut resid = Vec::new();
        let mut resid_norm = 0.0;
        for j in start..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let mut h = vec![0.0; j + 1];
            orthogonalize(&basis, &mut w, &mut h);
            for (i, hi) in h.iter().enumerate() {
                t[(i, j)] = *hi;
                t[(j, i)] = *hi;
            }
            let b = norm(&w);
            if j + 1 < m {
                let scale = t[(j, j)].abs().max(1.0);
                let (next, coupling) = if b <= 1e-12 * scale {
                    (random_unit_orthogonal(&mut rng, &basis, n), 0.0)
                } else {
                    (w.iter().map(|v| v / b).collect(), b)
                };
                t[(j + 1, j)] = coupling;
                t[(j, j + 1)] = coupling;
                basis.push(next);
            } else {
                resid = w.clone();
                resid_norm = b;
            }
        }

        let (theta, s) = symmetric_eigen_sorted(t.clone());
        // below ~eps * ||A|| residuals are rounding noise; theta spans the
        // Krylov estimate of ||A||
        let anorm = theta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 1e3 * f64::EPSILON * anorm;
        let converged =
            (0..k).all(|i| resid_norm * s[(m - 1, i)].abs() <= (cfg.tol * theta[i].abs().max(1.0)).max(floor));
        let exhausted = matvecs >= cfg.max_matvecs;
        if converged || exhausted {
            let mut out = Vec::with_capacity(k);
            for i in 0..k {
                let mut y = vec![0.0; n];
                for (l, v) in basis.iter().enumerate() {
                    axpy(s[(l, i)], v, &mut y);
                }
                let nrm = norm(&y);
                y.iter_mut().for_each(|v| *v /= nrm);
                canonical_sign(&mut y);
                let res = residual(op, theta[i], &y);
                out.push(EigenPair { value: theta[i], vector: y, residual: res, iterations: matvecs });
            }
            if !converged {
                let worst = out.iter().map(|p| p.residual).fold(0.0, f64::max);
                return Err(Error::NoConvergence { iterations: matvecs, residual: worst });
            }
            return Ok(out);
        }

        // thick restart: keep the lowest Ritz vectors, continue from the residual
        let p = keep_after_restart;
        let mut kept = Vec::with_capacity(m);
        for i in 0..p {
            let mut y = vec![0.0; n];
            for (l, v) in basis.iter().enumerate() {
                axpy(s[(l, i)], v, &mut y);
            }
            kept.push(y);
        }
        t.fill(0.0);
        for i in 0..p {
            t[(i, i)] = theta[i];
        }
        let scale = theta.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let next = if resid_norm <= 1e-12 * scale {
            random_unit_orthogonal(&mut rng, &kept, n)
        } else {
            let mut r: Vec<f64> = resid.iter().map(|v| v / resid_norm).collect();
            let mut scratch = vec![0.0; p];
            orthogonalize(&kept, &mut r, &mut scratch);
            let nr = norm(&r);
            r.iter_mut().for_each(|v| *v /= nr);
            r
        };
        kept.push(next);
        basis = kept;
        start = p;
    }
}

/// The algebraically smallest eigenpair.
pub fn smallest_eigpair(op: &(impl SymmetricOperator + ?Sized), cfg: &EigenConfig) -> Result<EigenPair> {
    Ok(smallest_eigpairs(op, 1, cfg)?.remove(0))
}

/// The algebraically largest eigenpair.
pub fn largest_eigpair(op: &(impl SymmetricOperator + ?Sized), cfg: &EigenConfig) -> Result<EigenPair> {
    let mut p = smallest_eigpair(&Negated(op), cfg)?;
    p.value = -p.value;
    Ok(p)
}

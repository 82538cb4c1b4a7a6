//! Bethe-Hessian variants, the regularized Laplacian and the classical
//! spectral baselines, all built on the sparsity pattern of a graph.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::sparse::SparseSymmetricMatrix;

/// Above this value of `beta * max|J|`, `1 - tanh^2` loses all precision.
pub const OVERFLOW_GUARD: f64 = 18.0;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// `H_{beta,J}`: diagonal `1 + sum_k sinh^2(beta J_ik)`, off-diagonal
/// `-sinh(2 beta J_ij) / 2`.
///
/// These are the `tanh^2/(1 - tanh^2)` and `tanh/(1 - tanh^2)` entries
/// written without the cancelling denominator.
pub fn bethe_hessian(j: &WeightedGraph, beta: f64) -> Result<SparseSymmetricMatrix> {
    check_beta(beta)?;
    let scaled = beta * j.max_abs_weight();
    if scaled > OVERFLOW_GUARD {
        return Err(Error::Overflow { scaled });
    }
    let diag: Vec<f64> =
        (0..j.n()).map(|i| 1.0 + j.neighbors(i).map(|(_, w)| (beta * w).sinh().powi(2)).sum::<f64>()).collect();
    Ok(SparseSymmetricMatrix::from_graph(j, &diag, |w| -0.5 * (2.0 * beta * w).sinh()))
}

fn check_pole(w: &WeightedGraph, x2: f64) -> Result<()> {
    for &(_, _, om) in w.edges() {
        let o2 = om * om;
        if (x2 - o2).abs() <= 1e-14 * x2.abs().max(o2) {
            return Err(Error::Pole { x2 });
        }
    }
    Ok(())
}

/// `H(x)` for edge weights `omega`:
/// `(1 + sum_k omega_ik^2/(x^2 - omega_ik^2)) delta_ij - x omega_ij/(x^2 - omega_ij^2)`.
pub fn bethe_hessian_generic(w: &WeightedGraph, x: f64) -> Result<SparseSymmetricMatrix> {
    let x2 = x * x;
    check_pole(w, x2)?;
    let diag: Vec<f64> =
        (0..w.n()).map(|i| 1.0 + w.neighbors(i).map(|(_, o)| o * o / (x2 - o * o)).sum::<f64>()).collect();
    Ok(SparseSymmetricMatrix::from_graph(w, &diag, |o| -x * o / (x2 - o * o)))
}

/// Dense `H(x)` at a complex argument.
pub fn bethe_hessian_complex(w: &WeightedGraph, x: Complex64) -> Result<DMatrix<Complex64>> {
    let n = w.n();
    let x2 = x * x;
    for &(_, _, o) in w.edges() {
        if (x2 - o * o).norm() <= 1e-14 * x2.norm().max(o * o) {
            return Err(Error::Pole { x2: x2.norm() });
        }
    }
    let mut h = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        h[(i, i)] = Complex64::new(1.0, 0.0);
    }
    for &(i, j, o) in w.edges() {
        let den = x2 - o * o;
        let d = o * o / den;
        h[(i, i)] += d;
        h[(j, j)] += d;
        let off = -x * o / den;
        h[(i, j)] = off;
        h[(j, i)] = off;
    }
    Ok(h)
}

/// The common absolute weight of a signed graph.
pub fn signed_magnitude(j: &WeightedGraph) -> Result<f64> {
    let j0 = j.edges().first().map(|e| e.2.abs()).ok_or_else(|| Error::NotSigned("graph has no edges".into()))?;
    for &(a, b, w) in j.edges() {
        if (w.abs() - j0).abs() > 1e-12 * j0 {
            return Err(Error::NotSigned(format!("edge ({a}, {b}) has |w| = {} but J0 = {j0}", w.abs())));
        }
    }
    Ok(j0)
}

/// `(1 - t^2) I + t^2 D - t S` with `t = tanh(beta J0)` and `S` the sign matrix
/// of a graph whose weights are all `±J0`.
pub fn signed_bethe_hessian(j: &WeightedGraph, beta: f64) -> Result<SparseSymmetricMatrix> {
    check_beta(beta)?;
    let j0 = signed_magnitude(j)?;
    let t = (beta * j0).tanh();
    let diag: Vec<f64> = (0..j.n()).map(|i| (1.0 - t * t) + t * t * j.degree(i) as f64).collect();
    Ok(SparseSymmetricMatrix::from_graph(j, &diag, |w| -t * w.signum()))
}

/// `ln |sinh(a)|`, accurate for large `|a|`.
fn ln_sinh_abs(a: f64) -> f64 {
    let a = a.abs();
    if a < 20.0 {
        a.sinh().ln()
    } else {
        a - std::f64::consts::LN_2 + (-(-2.0 * a).exp()).ln_1p()
    }
}

/// `L = I - L'^{-1/2} W L'^{-1/2}` with `W_ij = sinh(2 beta J_ij)/2` and
/// `L' = I + diag(sum_k sinh^2(beta J_ik))`, so that `H_{beta,J} = L'^{1/2} L L'^{1/2}`.
#[derive(Debug, Clone)]
pub struct RegularizedLaplacian {
    pub matrix: SparseSymmetricMatrix,
    /// Diagonal of `L'^{1/2}`; may be `inf` only for astronomically large `beta`.
    pub sqrt_lambda: Vec<f64>,
}

impl RegularizedLaplacian {
    /// `x = L'^{-1/2} v`, normalized: the Bethe-Hessian vector matching an
    /// eigenvector `v` of `L`.
    pub fn to_hessian_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = v.iter().zip(&self.sqrt_lambda).map(|(a, s)| a / s).collect();
        normalize(&mut x);
        x
    }

    /// `v = L'^{1/2} x`, normalized.
    pub fn from_hessian_vector(&self, x: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = x.iter().zip(&self.sqrt_lambda).map(|(a, s)| a * s).collect();
        normalize(&mut v);
        v
    }
}

pub(crate) fn normalize(x: &mut [f64]) -> f64 {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    nrm
}

/// Entries stay `O(1)` for any `beta`; everything is assembled in log space.
pub fn regularized_laplacian(j: &WeightedGraph, beta: f64) -> Result<RegularizedLaplacian> {
    check_beta(beta)?;
    let n = j.n();
    let ln_lambda: Vec<f64> = (0..n)
        .map(|i| {
            let terms: Vec<f64> = j.neighbors(i).map(|(_, w)| 2.0 * ln_sinh_abs(beta * w)).collect();
            let m = terms.iter().copied().fold(0.0, f64::max);
            m + ((-m).exp() + terms.iter().map(|t| (t - m).exp()).sum::<f64>()).ln()
        })
        .collect();
    let (rp, cols, vals) = j.csr();
    let mut triplets = Vec::with_capacity(cols.len() / 2 + n);
    for i in 0..n {
        triplets.push((i, i, 1.0));
        for s in rp[i]..rp[i + 1] {
            let k = cols[s];
            if k > i {
                let a = beta * vals[s];
                // ln |sinh(2a)/2| = ln|sinh a| + ln cosh a
                let ln_w = ln_sinh_abs(a) + ln_cosh(a);
                let v = -a.signum() * (ln_w - 0.5 * (ln_lambda[i] + ln_lambda[k])).exp();
                triplets.push((i, k, v));
            }
        }
    }
    let matrix = SparseSymmetricMatrix::from_triplets(n, &triplets)?;
    let sqrt_lambda = ln_lambda.iter().map(|l| (0.5 * l).exp()).collect();
    Ok(RegularizedLaplacian { matrix, sqrt_lambda })
}

fn ln_cosh(a: f64) -> f64 {
    let a = a.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `D - J` with `D = diag(sum_k |J_ik|)`.
pub fn signed_laplacian(j: &WeightedGraph) -> SparseSymmetricMatrix {
    let diag: Vec<f64> = (0..j.n()).map(|i| j.neighbors(i).map(|(_, w)| w.abs()).sum()).collect();
    SparseSymmetricMatrix::from_graph(j, &diag, |w| -w)
}

/// The weighted adjacency matrix with an explicit zero diagonal.
pub fn adjacency(j: &WeightedGraph) -> SparseSymmetricMatrix {
    SparseSymmetricMatrix::from_graph(j, &vec![0.0; j.n()], |w| w)
}

/// `I - beta J`, the naive mean-field Hessian.
pub fn mean_field_hessian(j: &WeightedGraph, beta: f64) -> SparseSymmetricMatrix {
    SparseSymmetricMatrix::from_graph(j, &vec![1.0; j.n()], |w| -beta * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{balanced_labels, generate_er, plant_labels};
    use crate::weights::{sample_weights_from, WeightDistribution};

    fn sorted_eigs(m: &SparseSymmetricMatrix) -> Vec<f64> {
        let mut e: Vec<f64> = m.to_dense().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    fn gaussian_graph(n: usize, c: f64, seed: u64) -> WeightedGraph {
        let g = generate_er(n, c, seed).unwrap();
        sample_weights_from(&g, &WeightDistribution::gaussian(0.7, 1.0).unwrap(), seed).unwrap()
    }

    #[test]
    fn single_edge_closed_form() {
        let beta = 1.0;
        let jw = 0.5f64.atanh();
        let g = WeightedGraph::from_edges(2, [(0, 1, jw)]).unwrap();
        let h = bethe_hessian(&g, beta).unwrap();
        assert!((h.get(0, 0) - 4.0 / 3.0).abs() < 1e-14);
        assert!((h.get(0, 1) + 2.0 / 3.0).abs() < 1e-14);
        let e = sorted_eigs(&h);
        assert!((e[0] - 2.0 / 3.0).abs() < 1e-14 && (e[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn small_beta_is_identity() {
        let g = gaussian_graph(50, 4.0, 1);
        let h = bethe_hessian(&g, 1e-12).unwrap();
        assert!(h.max_abs_diff(&SparseSymmetricMatrix::identity(50)) < 1e-10);
        let l = regularized_laplacian(&g, 1e-12).unwrap();
        assert!(l.matrix.max_abs_diff(&SparseSymmetricMatrix::identity(50)) < 1e-10);
    }

    #[test]
    fn overflow_guard() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 2.0)]).unwrap();
        assert!(matches!(bethe_hessian(&g, 10.0), Err(Error::Overflow { .. })));
        assert!(bethe_hessian(&g, 8.0).is_ok());
    }

    #[test]
    fn generic_at_one_matches_direct_form() {
        let g = gaussian_graph(200, 5.0, 2);
        for &beta in &[0.1, 0.4, 1.3] {
            let omega = g.map_weights(|w| (beta * w).tanh()).unwrap();
            let a = bethe_hessian_generic(&omega, 1.0).unwrap();
            let b = bethe_hessian(&g, beta).unwrap();
            let scale = b.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            assert!(a.max_abs_diff(&b) < 1e-12 * scale, "beta {beta}");
        }
    }

    #[test]
    fn generic_single_edge_substitution() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 0.5)]).unwrap();
        let h = bethe_hessian_generic(&g, 2.0).unwrap();
        assert!((h.get(0, 0) - 16.0 / 15.0).abs() < 1e-15);
        assert!((h.get(0, 1) + 4.0 / 15.0).abs() < 1e-15);
        assert!(matches!(bethe_hessian_generic(&g, -0.5), Err(Error::Pole { .. })));
        let far = bethe_hessian_generic(&g, 1e9).unwrap();
        assert!(far.max_abs_diff(&SparseSymmetricMatrix::identity(2)) < 1e-9);
    }

    #[test]
    fn complex_form_agrees_on_real_axis() {
        let g = gaussian_graph(20, 3.0, 3).map_weights(|w| w.tanh()).unwrap();
        let a = bethe_hessian_generic(&g, 1.7).unwrap().to_dense();
        let b = bethe_hessian_complex(&g, Complex64::new(1.7, 0.0)).unwrap();
        for i in 0..20 {
            for k in 0..20 {
                assert!((b[(i, k)].re - a[(i, k)]).abs() < 1e-14 && b[(i, k)].im == 0.0);
            }
        }
    }

    #[test]
    fn gauge_preserves_spectrum() {
        let g = gaussian_graph(80, 4.0, 4);
        let sigma = balanced_labels(80, 9);
        let gt = plant_labels(&g, &sigma).unwrap().graph;
        for &beta in &[0.2, 0.7] {
            let a = sorted_eigs(&bethe_hessian(&g, beta).unwrap());
            let b = sorted_eigs(&bethe_hessian(&gt, beta).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn signed_form_is_scaled_bethe_hessian() {
        let g = generate_er(50, 4.0, 5).unwrap();
        let s = sample_weights_from(&g, &WeightDistribution::plus_minus_j(0.8, 1.5).unwrap(), 5).unwrap();
        let beta = 0.37;
        let t = (beta * 1.5f64).tanh();
        let hs = signed_bethe_hessian(&s, beta).unwrap();
        let h = bethe_hessian(&s, beta).unwrap().scaled(1.0 - t * t);
        assert!(hs.max_abs_diff(&h) < 1e-12);
        assert!(signed_bethe_hessian(&gaussian_graph(20, 3.0, 1), 0.5).is_err());
    }

    #[test]
    fn signed_form_limits() {
        let g = generate_er(60, 4.0, 6).unwrap();
        let s = sample_weights_from(&g, &WeightDistribution::plus_minus_j(0.7, 1.0).unwrap(), 6).unwrap();
        let big = signed_bethe_hessian(&s, 40.0).unwrap();
        assert!(big.max_abs_diff(&signed_laplacian(&s)) < 1e-12);
        let small = signed_bethe_hessian(&s, 1e-9).unwrap();
        assert!(small.max_abs_diff(&SparseSymmetricMatrix::identity(60)) < 1e-8);
    }

    #[test]
    fn regularized_laplacian_congruence() {
        let g = gaussian_graph(100, 4.0, 7);
        let beta = 0.6;
        let h = bethe_hessian(&g, beta).unwrap().to_dense();
        let l = regularized_laplacian(&g, beta).unwrap();
        let s = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(l.sqrt_lambda.clone()));
        let back = &s * l.matrix.to_dense() * &s;
        assert!((back - &h).amax() < 1e-10 * h.amax());
    }

    #[test]
    fn regularized_laplacian_survives_huge_beta() {
        let g = gaussian_graph(100, 4.0, 8);
        let l = regularized_laplacian(&g, 500.0).unwrap();
        for i in 0..100 {
            for (_, v) in l.matrix.row(i) {
                assert!(v.is_finite() && v.abs() <= 1.0 + 1e-12);
            }
        }
        let (lo, _) = l.matrix.gershgorin_bounds();
        assert!(lo > -1.0 - 1e-9);
    }
}

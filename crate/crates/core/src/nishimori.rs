//! Spin-glass and ferromagnetic transition temperatures, and the
//! Nishimori temperature estimate from the second zero-crossing of the
//! smallest Bethe-Hessian eigenvalue.

use serde::{Deserialize, Serialize};

use crate::eigen::{smallest_eigpair, EigenConfig};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::matrices::{bethe_hessian, normalize, regularized_laplacian, signed_bethe_hessian, signed_magnitude};
use crate::weights::{analytic_beta_f, analytic_beta_sg, WeightDistribution};

/// Root of `c * mean_e tanh^2(beta J_e) = 1` over the observed weights.
pub fn estimate_beta_sg(j: &WeightedGraph) -> Result<f64> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("cannot estimate beta_SG without edges".into()));
    }
    analytic_beta_sg(&WeightDistribution::from_graph(j)?, j.avg_degree())
}

/// Smallest root of `c * mean_e tanh(beta J_e) = 1`. Only meaningful on
/// un-gauged weights.
pub fn estimate_beta_f(j: &WeightedGraph) -> Result<f64> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("cannot estimate beta_F without edges".into()));
    }
    analytic_beta_f(&WeightDistribution::from_graph(j)?, j.avg_degree())
}

/// Which matrix supplies the smallest eigenpair at a given `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Signed graphs use the signed Bethe-Hessian, other graphs the
    /// regularized Laplacian.
    Auto,
    Hessian,
    Laplacian,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NishimoriConfig {
    /// Stop once `|gamma_min| <= epsilon`.
    pub epsilon: f64,
    /// `beta_th = cap_factor * sqrt(c) * beta_SG`.
    pub cap_factor: f64,
    pub max_iterations: usize,
    pub route: Route,
    pub eigen: EigenConfig,
}

impl Default for NishimoriConfig {
    fn default() -> Self {
        Self { epsilon: 1e-5, cap_factor: 2.0, max_iterations: 50, route: Route::Auto, eigen: EigenConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub beta: f64,
    pub gamma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NishimoriEstimate {
    pub beta_n_hat: f64,
    pub beta_sg_hat: f64,
    pub beta_th: f64,
    pub detectable: bool,
    pub capped: bool,
    pub iterations: Vec<Iterate>,
}

impl NishimoriEstimate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Smallest eigenvalue at `beta` and the matching unit eigenvector of
/// `H_{beta,J}`.
///
/// On the Laplacian and signed routes the eigenvalue is that of the
/// congruent (resp. rescaled) matrix: same sign, different magnitude.
#[derive(Debug, Clone)]
pub struct SmallestMode {
    pub gamma: f64,
    pub vector: Vec<f64>,
}

pub fn resolve_route(j: &WeightedGraph, route: Route) -> Route {
    match route {
        Route::Auto => {
            if signed_magnitude(j).is_ok() {
                Route::Signed
            } else {
                Route::Laplacian
            }
        }
        r => r,
    }
}

pub fn smallest_mode(j: &WeightedGraph, beta: f64, route: Route, eigen: &EigenConfig) -> Result<SmallestMode> {
    match resolve_route(j, route) {
        Route::Hessian => {
            let p = smallest_eigpair(&bethe_hessian(j, beta)?, eigen)?;
            Ok(SmallestMode { gamma: p.value, vector: p.vector })
        }
        Route::Signed => {
            let p = smallest_eigpair(&signed_bethe_hessian(j, beta)?, eigen)?;
            Ok(SmallestMode { gamma: p.value, vector: p.vector })
        }
        _ => {
            let l = regularized_laplacian(j, beta)?;
            let p = smallest_eigpair(&l.matrix, eigen)?;
            Ok(SmallestMode { gamma: p.value, vector: l.to_hessian_vector(&p.vector) })
        }
    }
}

/// `x^T H_{beta,J} x / x^T x`.
pub fn courant_fischer_value(x: &[f64], j: &WeightedGraph, beta: f64) -> f64 {
    let nrm2: f64 = x.iter().map(|v| v * v).sum();
    let mut acc = nrm2;
    for &(a, b, w) in j.edges() {
        let s = (beta * w).sinh();
        let c = (beta * w).cosh();
        acc += s * ((x[a] * x[a] + x[b] * x[b]) * s - 2.0 * x[a] * x[b] * c);
    }
    acc / nrm2
}

/// Root of `f(beta) = x^T H_{beta,J} x` above `lo`, where `f(lo) < 0`.
///
/// The upper end starts at `min(2 lo, beta_th)` and doubles until `f` turns
/// positive; bisection then runs until `|f| < 1e-10`. Returns `(beta_th,
/// true)` if `f` stays non-positive up to the cap.
pub fn courant_fischer_root(x: &[f64], j: &WeightedGraph, lo: f64, beta_th: f64) -> Result<(f64, bool)> {
    let f = |b: f64| courant_fischer_value(x, j, b);
    if !(f(lo) < 0.0) {
        return Err(Error::Bracket(format!("x^T H x is not negative at beta = {lo}")));
    }
    if !(beta_th > lo) {
        return Ok((beta_th, true));
    }
    let mut a = lo;
    let mut b = (2.0 * lo).min(beta_th);
    loop {
        let fb = f(b);
        if fb.is_nan() {
            return Err(Error::Bracket(format!("x^T H x is not finite at beta = {b}")));
        }
        if fb > 0.0 {
            break;
        }
        if b >= beta_th {
            return Ok((beta_th, true));
        }
        a = b;
        b = (2.0 * b).min(beta_th);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm.abs() < 1e-10 || b - a <= 1e-15 * b {
            return Ok((mid, false));
        }
        if fm > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok((0.5 * (a + b), false))
}

/// The same root for a signed graph, in closed form.
///
/// With `r = coth(beta J0)`, `x^T H x` is proportional to
/// `r^2 - 1 + d - r s` where `d = x^T D x`, `s = x^T S x` and `S` the sign
/// matrix; the iterate moves to the smaller root, i.e. to larger `beta`.
pub fn signed_root(x: &[f64], j: &WeightedGraph, beta_th: f64) -> Result<(f64, bool)> {
    let j0 = signed_magnitude(j)?;
    let nrm2: f64 = x.iter().map(|v| v * v).sum();
    let mut d = 0.0;
    let mut s = 0.0;
    for &(a, b, w) in j.edges() {
        d += x[a] * x[a] + x[b] * x[b];
        s += 2.0 * w.signum() * x[a] * x[b];
    }
    d /= nrm2;
    s /= nrm2;
    let disc = s * s - 4.0 * (d - 1.0);
    if disc < 0.0 {
        return Err(Error::Bracket("quadratic in r has no real root".into()));
    }
    let r = 0.5 * (s - disc.sqrt());
    if r <= 1.0 {
        return Ok((beta_th, true));
    }
    let beta = (1.0 / r).atanh() / j0;
    if beta >= beta_th {
        Ok((beta_th, true))
    } else {
        Ok((beta, false))
    }
}

/// Iterates `beta_{t+1} = root of x_t^T H_beta x_t` from `beta_SG` until the
/// smallest eigenvalue vanishes.
pub fn estimate_beta_nishimori(j: &WeightedGraph, cfg: &NishimoriConfig) -> Result<NishimoriEstimate> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", cfg.epsilon)));
    }
    let beta_sg_hat = estimate_beta_sg(j)?;
    let beta_th = cfg.cap_factor * j.avg_degree().sqrt() * beta_sg_hat;
    let route = resolve_route(j, cfg.route);

    let mut mode = smallest_mode(j, beta_sg_hat, route, &cfg.eigen)?;
    let mut iterations = vec![Iterate { beta: beta_sg_hat, gamma_min: mode.gamma }];
    let mut est = NishimoriEstimate {
        beta_n_hat: beta_sg_hat,
        beta_sg_hat,
        beta_th,
        detectable: mode.gamma < 0.0,
        capped: false,
        iterations: Vec::new(),
    };
    if !est.detectable {
        est.iterations = iterations;
        return Ok(est);
    }
    let mut beta = beta_sg_hat;
    for _ in 0..cfg.max_iterations {
        let (next, capped) = if route == Route::Signed {
            signed_root(&mode.vector, j, beta_th)?
        } else {
            courant_fischer_root(&mode.vector, j, beta, beta_th)?
        };
        beta = next;
        mode = smallest_mode(j, beta, route, &cfg.eigen)?;
        iterations.push(Iterate { beta, gamma_min: mode.gamma });
        if capped || mode.gamma.abs() <= cfg.epsilon || mode.gamma > 0.0 {
            est.beta_n_hat = beta;
            est.capped = capped;
            est.iterations = iterations;
            return Ok(est);
        }
    }
    let residual = mode.gamma.abs();
    Err(Error::NoConvergence { iterations: cfg.max_iterations, residual })
}

/// The unit eigenvector attached to the smallest eigenvalue of
/// `H_{beta,J}`, extracted through `route`.
pub fn informative_vector(j: &WeightedGraph, beta: f64, route: Route, eigen: &EigenConfig) -> Result<Vec<f64>> {
    let mut v = smallest_mode(j, beta, route, eigen)?.vector;
    normalize(&mut v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_er, planted_instance, Topology};
    use crate::sparse::SparseSymmetricMatrix;

    fn signed_all(n: usize, c: f64, seed: u64, sign: f64) -> WeightedGraph {
        generate_er(n, c, seed).unwrap().map_weights(|_| sign).unwrap()
    }

    #[test]
    fn beta_sg_signed_closed_form() {
        // regular ring-of-cliques stand-in: any graph with c = 4 exactly
        let n = 400;
        let edges = (0..n).flat_map(|i| [(i, (i + 1) % n, 1.0), (i, (i + 2) % n, -1.0)]);
        let g = WeightedGraph::from_edges(n, edges).unwrap();
        assert_eq!(g.avg_degree(), 4.0);
        let b = estimate_beta_sg(&g).unwrap();
        assert!((b - 0.5f64.atanh()).abs() < 1e-10 * b);
        let scaled = g.map_weights(|w| 2.5 * w).unwrap();
        assert!((estimate_beta_sg(&scaled).unwrap() - b / 2.5).abs() < 1e-10 * b);
        let f = estimate_beta_f(&g.map_weights(|w| w.abs()).unwrap()).unwrap();
        assert!((f - 0.25f64.atanh()).abs() < 1e-10 * f);
        assert!(estimate_beta_f(&g.map_weights(|w| -w.abs()).unwrap()).is_err());
    }

    #[test]
    fn beta_sg_requires_degree_above_one() {
        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, -1.0)]).unwrap();
        assert!(matches!(estimate_beta_sg(&g), Err(Error::UndetectableDegree { .. })));
        assert!(estimate_beta_sg(&WeightedGraph::empty(3)).is_err());
    }

    #[test]
    fn courant_fischer_value_is_quadratic_form() {
        let g = generate_er(200, 4.0, 1).unwrap();
        let j = crate::weights::sample_weights_from(&g, &WeightDistribution::gaussian(1.0, 1.0).unwrap(), 1).unwrap();
        let x: Vec<f64> = (0..200).map(|i| ((i * 7) as f64).cos()).collect();
        for &b in &[0.1, 0.5, 1.2] {
            let h: SparseSymmetricMatrix = bethe_hessian(&j, b).unwrap();
            let nrm2: f64 = x.iter().map(|v| v * v).sum();
            let q = h.quadratic_form(&x) / nrm2;
            assert!((courant_fischer_value(&x, &j, b) - q).abs() < 1e-10 * q.abs().max(1.0));
        }
    }

    #[test]
    fn k4_constant_vector() {
        // f(r) = (r - 1)(r - 2) for the constant vector on K4 with unit weights
        let g = WeightedGraph::from_edges(4, (0..4).flat_map(|i| ((i + 1)..4).map(move |k| (i, k, 1.0)))).unwrap();
        let bstar = 0.5f64.atanh();
        let x = vec![0.5; 4];
        assert!(courant_fischer_value(&x, &g, bstar).abs() < 1e-12);
        assert!(courant_fischer_value(&x, &g, 0.9 * bstar) > 0.0);
        assert!(courant_fischer_value(&x, &g, 1.1 * bstar) < 0.0);
        // the smaller root r = 1 is beta = infinity
        assert_eq!(signed_root(&x, &g, 7.0).unwrap(), (7.0, true));
    }

    #[test]
    fn root_at_exact_null_vector() {
        let law = WeightDistribution::gaussian(1.0, 1.0).unwrap();
        let inst = planted_instance(Topology::ErdosRenyi, 200, 6.0, &law, 4).unwrap();
        let j = &inst.graph;
        let gamma = |b: f64| crate::eigen::symmetric_eigen_sorted(bethe_hessian(j, b).unwrap().to_dense()).0[0];
        // bracket the second zero-crossing of the smallest eigenvalue
        let bsg = estimate_beta_sg(j).unwrap();
        let (mut lo, mut hi) = (bsg, bsg);
        while gamma(hi) < 0.0 || hi == bsg {
            lo = hi;
            hi *= 1.2;
        }
        assert!(gamma(lo) < 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if gamma(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let bstar = 0.5 * (lo + hi);
        let (_, vecs) = crate::eigen::symmetric_eigen_sorted(bethe_hessian(j, bstar).unwrap().to_dense());
        let x: Vec<f64> = vecs.column(0).iter().copied().collect();
        let (r, capped) = courant_fischer_root(&x, j, 0.97 * bstar, 10.0).unwrap();
        assert!(!capped);
        assert!((r - bstar).abs() < 1e-8 * bstar, "{r} vs {bstar}");
    }

    #[test]
    fn all_positive_signed_graph_hits_cap() {
        let g = signed_all(2000, 6.0, 3, 1.0);
        let cfg = NishimoriConfig { cap_factor: 1.0, ..Default::default() };
        let est = estimate_beta_nishimori(&g, &cfg).unwrap();
        assert!(est.detectable && est.capped);
        assert!((est.beta_th - g.avg_degree().sqrt() * est.beta_sg_hat).abs() < 1e-12);
        assert_eq!(est.beta_n_hat, est.beta_th);
    }

    #[test]
    fn gaussian_recovery_small() {
        let law = WeightDistribution::gaussian(1.0, 1.0).unwrap();
        let inst = planted_instance(Topology::ErdosRenyi, 3000, 8.0, &law, 5).unwrap();
        let est = estimate_beta_nishimori(&inst.graph, &NishimoriConfig::default()).unwrap();
        assert!(est.detectable && !est.capped);
        assert!((est.beta_n_hat - 1.0).abs() < 0.1, "{est:?}");
        let last = est.iterations.last().unwrap();
        assert!(last.gamma_min.abs() <= 1e-5);
        assert!(est.iterations.windows(2).all(|w| w[1].beta > w[0].beta));
    }

    #[test]
    fn routes_agree() {
        let law = WeightDistribution::gaussian(1.0, 1.0).unwrap();
        let inst = planted_instance(Topology::ErdosRenyi, 400, 6.0, &law, 8).unwrap();
        let mut betas = Vec::new();
        for route in [Route::Hessian, Route::Laplacian] {
            let cfg = NishimoriConfig { route, epsilon: 1e-9, ..Default::default() };
            betas.push(estimate_beta_nishimori(&inst.graph, &cfg).unwrap().beta_n_hat);
        }
        assert!((betas[0] - betas[1]).abs() < 1e-6, "{betas:?}");
    }

    #[test]
    fn signed_route_matches_hessian_route() {
        let law = WeightDistribution::plus_minus_j(0.85, 1.0).unwrap();
        let inst = planted_instance(Topology::ErdosRenyi, 400, 6.0, &law, 2).unwrap();
        let a =
            estimate_beta_nishimori(&inst.graph, &NishimoriConfig { epsilon: 1e-10, ..Default::default() }).unwrap();
        let cfg = NishimoriConfig { route: Route::Hessian, epsilon: 1e-10, ..Default::default() };
        let b = estimate_beta_nishimori(&inst.graph, &cfg).unwrap();
        assert!((a.beta_n_hat - b.beta_n_hat).abs() < 1e-6, "{} vs {}", a.beta_n_hat, b.beta_n_hat);
    }

    #[test]
    fn json_report() {
        let law = WeightDistribution::gaussian(1.0, 1.0).unwrap();
        let inst = planted_instance(Topology::ErdosRenyi, 300, 6.0, &law, 1).unwrap();
        let est = estimate_beta_nishimori(&inst.graph, &NishimoriConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&est.to_json().unwrap()).unwrap();
        for key in ["beta_n_hat", "beta_sg_hat", "beta_th", "detectable", "capped", "iterations"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["iterations"][0].get("gamma_min").is_some());
    }
}

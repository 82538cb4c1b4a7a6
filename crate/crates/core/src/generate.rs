//! Synthetic graphs: Erdős–Rényi and Chung–Lu topologies, planted labels.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{item_rng, stream_rng, streams};
use crate::weights::{analytic_beta_n, analytic_beta_sg, sample_weights_from, WeightDistribution};

/// A weighted graph `J~` with the labels that were planted into it.
#[derive(Debug, Clone)]
pub struct LabeledInstance {
    pub graph: WeightedGraph,
    pub labels: Vec<i8>,
    pub true_beta_n: Option<f64>,
}

impl LabeledInstance {
    pub fn new(graph: WeightedGraph, labels: Vec<i8>, true_beta_n: Option<f64>) -> Result<Self> {
        check_labels(&labels, graph.n())?;
        Ok(Self { graph, labels, true_beta_n })
    }
}

pub(crate) fn check_labels(labels: &[i8], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Dimension { expected: n, got: labels.len() });
    }
    if let Some(l) = labels.iter().find(|l| **l != 1 && **l != -1) {
        return Err(Error::InvalidParameter(format!("label {l} is not ±1")));
    }
    Ok(())
}

pub(crate) fn check_size(n: usize, c: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("need c >= 0, got {c}")));
    }
    if c >= n as f64 {
        return Err(Error::InvalidParameter(format!("need c < n, got c = {c}, n = {n}")));
    }
    Ok(c / n as f64)
}

/// Erdős–Rényi graph: every pair joined independently with probability `c/n`.
///
/// Row `i` enumerates its partners `j > i` by geometric skipping, drawing
/// from item `i` of the ER stream.
pub fn generate_er(n: usize, c: f64, seed: u64) -> Result<WeightedGraph> {
    let p = check_size(n, c)?;
    let edges = bernoulli_pairs(n, p, seed, streams::ER_ROWS)?.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    Ok(WeightedGraph::from_sorted_unchecked(n, edges))
}

/// Pairs `i < j`, each present independently with probability `p`, in
/// lexicographic order. Row `i` draws from item `i` of `stream`.
pub(crate) fn bernoulli_pairs(n: usize, p: f64, seed: u64, stream: u64) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    if p > 0.0 {
        let geo = Geometric::new(p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for i in 0..n {
            let mut rng = item_rng(seed, stream, i as u64);
            let mut j = i as u64;
            loop {
                j = j.saturating_add(1).saturating_add(geo.sample(&mut rng));
                if j >= n as u64 {
                    break;
                }
                pairs.push((i, j as usize));
            }
        }
    }
    Ok(pairs)
}

/// Power-law intrinsic weights `theta_i ∝ (i+1)^{-1/(exponent-1)}`, scaled so
/// that they sum to `n`. Sorted in decreasing order.
pub fn powerlaw_thetas(n: usize, exponent: f64) -> Result<Vec<f64>> {
    if !(exponent > 2.0) {
        return Err(Error::InvalidParameter(format!("power-law exponent must be > 2, got {exponent}")));
    }
    let a = 1.0 / (exponent - 1.0);
    let mut theta: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-a)).collect();
    let s: f64 = theta.iter().sum();
    for t in &mut theta {
        *t *= n as f64 / s;
    }
    Ok(theta)
}

/// Chung–Lu graph with pair probability `min(1, c theta_i theta_j / n)`.
///
/// `theta` must be sorted in decreasing order; rows are enumerated with the
/// skip-and-thin scheme of Miller and Hagberg, so the cost is `O(n + |E|)`.
pub fn generate_chung_lu(theta: &[f64], c: f64, seed: u64) -> Result<WeightedGraph> {
    let n = theta.len();
    check_size(n, c)?;
    if theta.windows(2).any(|w| w[0] < w[1]) || theta.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter("theta must be non-negative and non-increasing".into()));
    }
    let scale = c / n as f64;
    let mut edges = Vec::new();
    for i in 0..n {
        let mut rng = item_rng(seed, streams::POWERLAW_ROWS, i as u64);
        let mut j = i + 1;
        if j >= n {
            break;
        }
        let mut p = (scale * theta[i] * theta[j]).min(1.0);
        while j < n && p > 0.0 {
            if p < 1.0 {
                let u: f64 = rng.random();
                // number of failures before the first success
                let skip = ((1.0 - u).ln() / (1.0 - p).ln()).floor();
                if !skip.is_finite() || skip >= (n - j) as f64 {
                    break;
                }
                j += skip as usize;
            }
            if j >= n {
                break;
            }
            let q = (scale * theta[i] * theta[j]).min(1.0);
            if rng.random::<f64>() < q / p {
                edges.push((i, j, 1.0));
            }
            p = q;
            j += 1;
        }
    }
    Ok(WeightedGraph::from_sorted_unchecked(n, edges))
}

/// Chung–Lu graph with power-law intrinsic weights of the given exponent.
pub fn generate_powerlaw(n: usize, c: f64, exponent: f64, seed: u64) -> Result<WeightedGraph> {
    check_size(n, c)?;
    let theta = powerlaw_thetas(n, exponent)?;
    generate_chung_lu(&theta, c, seed)
}

/// `J~_ij = J_ij sigma_i sigma_j` on the same topology.
pub fn plant_labels(j: &WeightedGraph, sigma: &[i8]) -> Result<LabeledInstance> {
    check_labels(sigma, j.n())?;
    let w: Vec<f64> = j.edges().iter().map(|&(a, b, w)| w * f64::from(sigma[a]) * f64::from(sigma[b])).collect();
    Ok(LabeledInstance { graph: j.with_weights(&w)?, labels: sigma.to_vec(), true_beta_n: None })
}

/// Two classes of equal size (the first `ceil(n/2)` get +1) in a random order.
pub fn balanced_labels(n: usize, seed: u64) -> Vec<i8> {
    let mut s: Vec<i8> = (0..n).map(|i| if i < n.div_ceil(2) { 1 } else { -1 }).collect();
    s.shuffle(&mut stream_rng(seed, streams::LABELS));
    s
}

/// Topology family for planted instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi,
    PowerLaw { exponent: f64 },
}

impl Topology {
    pub fn generate(&self, n: usize, c: f64, seed: u64) -> Result<WeightedGraph> {
        match *self {
            Topology::ErdosRenyi => generate_er(n, c, seed),
            Topology::PowerLaw { exponent } => generate_powerlaw(n, c, exponent, seed),
        }
    }
}

/// Planted two-class instance: topology, i.i.d. weights from `law`, balanced
/// labels, gauge `J~ = J ∘ sigma sigma^T`. Every component gets its own
/// stream of `seed`.
pub fn planted_instance(
    topology: Topology,
    n: usize,
    c: f64,
    law: &WeightDistribution,
    seed: u64,
) -> Result<LabeledInstance> {
    let g = topology.generate(n, c, seed)?;
    let j = sample_weights_from(&g, law, seed)?;
    let sigma = balanced_labels(n, seed);
    let mut inst = plant_labels(&j, &sigma)?;
    inst.true_beta_n = analytic_beta_n(law).ok();
    Ok(inst)
}

/// Gaussian mean `J0` such that `beta_N / beta_SG = ratio` for the given
/// `nu` and average degree `c` (model expectations).
pub fn gaussian_j0_for_ratio(ratio: f64, nu: f64, c: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::InvalidParameter(format!("ratio must be > 0, got {ratio}")));
    }
    let g = |j0: f64| -> f64 {
        let d = WeightDistribution::Gaussian { j0, nu };
        let bsg = analytic_beta_sg(&d, c).unwrap_or(f64::INFINITY);
        j0 / (nu * nu) - ratio * bsg
    };
    let mut hi = nu;
    let mut guard = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Bracket(format!("no J0 reaches ratio {ratio}")));
        }
    }
    Ok(crate::weights::bisect(&g, 0.0, hi, 1e-12))
}

//! Two-class node classification: the Nishimori Bethe-Hessian method, the
//! spectral baselines, belief propagation, and the overlap score.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{largest_eigpair, smallest_eigpair, EigenConfig};
use crate::error::{Error, Result};
use crate::generate::check_labels;
use crate::graph::WeightedGraph;
use crate::matrices::{adjacency, signed_laplacian};
use crate::nishimori::{
    estimate_beta_nishimori, estimate_beta_sg, informative_vector, NishimoriConfig, NishimoriEstimate,
};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NishimoriBh,
    SpinglassBh,
    MeanField,
    SignedLaplacian,
    BeliefPropagation,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::NishimoriBh,
        Method::SpinglassBh,
        Method::MeanField,
        Method::SignedLaplacian,
        Method::BeliefPropagation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NishimoriBh => "nishimori_bh",
            Method::SpinglassBh => "spinglass_bh",
            Method::MeanField => "mean_field",
            Method::SignedLaplacian => "signed_laplacian",
            Method::BeliefPropagation => "belief_propagation",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nishimori" | "nishimori_bh" => Ok(Method::NishimoriBh),
            "spinglass" | "spinglass_bh" => Ok(Method::SpinglassBh),
            "mean_field" | "mf" => Ok(Method::MeanField),
            "signed_laplacian" | "laplacian" => Ok(Method::SignedLaplacian),
            "bp" | "belief_propagation" => Ok(Method::BeliefPropagation),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `false` when the smallest eigenvalue at `beta_SG` was already
    /// non-negative; labels are then uninformative.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detectable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<NishimoriEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub method: Method,
    pub beta_used: Option<f64>,
    #[serde(rename = "labels")]
    pub labels_hat: Vec<i8>,
    pub eigvec: Vec<f64>,
    pub overlap: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl ClassificationResult {
    fn new(method: Method, beta_used: Option<f64>, eigvec: Vec<f64>, labels_hat: Vec<i8>) -> Self {
        Self { method, beta_used, labels_hat, eigvec, overlap: None, diagnostics: Diagnostics::default() }
    }

    /// Fills in the overlap with ground-truth labels.
    pub fn score(&mut self, sigma: &[i8]) -> Result<f64> {
        let o = overlap(sigma, &self.labels_hat)?;
        self.overlap = Some(o);
        Ok(o)
    }
}

/// `|2 (fraction of agreeing entries - 1/2)|`.
pub fn overlap(sigma: &[i8], sigma_hat: &[i8]) -> Result<f64> {
    if sigma.len() != sigma_hat.len() {
        return Err(Error::Dimension { expected: sigma.len(), got: sigma_hat.len() });
    }
    if sigma.is_empty() {
        return Err(Error::InvalidParameter("overlap of empty label vectors".into()));
    }
    // |2a - n| / n is exactly invariant under a -> n - a
    let agree = sigma.iter().zip(sigma_hat).filter(|(a, b)| a == b).count() as i64;
    let n = sigma.len() as i64;
    Ok((2 * agree - n).abs() as f64 / n as f64)
}

/// Exact 1-D 2-means: the best split of the sorted values, larger-mean side
/// labelled `+1`. Equal values never straddle the split; if all values are
/// equal every label is `+1`.
pub fn kmeans_1d(values: &[f64]) -> Result<Vec<i8>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("2-means needs at least 2 values, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("2-means on non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut pre = vec![0.0; n + 1];
    let mut pre2 = vec![0.0; n + 1];
    for i in 0..n {
        pre[i + 1] = pre[i] + sorted[i];
        pre2[i + 1] = pre2[i] + sorted[i] * sorted[i];
    }
    let sse = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let s = pre[b] - pre[a];
        (pre2[b] - pre2[a]) - s * s / m
    };
    let mut best: Option<(f64, usize)> = None;
    for k in 1..n {
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let cost = sse(0, k) + sse(k, n);
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, k));
        }
    }
    let mut labels = vec![1i8; n];
    if let Some((_, k)) = best {
        for &i in &order[..k] {
            labels[i] = -1;
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Center the nonzero weights before estimating `beta_N`.
    pub shift: bool,
    pub nishimori: NishimoriConfig,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { shift: true, nishimori: NishimoriConfig::default() }
    }
}

impl ClassifyOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        let mut o = Self::default();
        o.nishimori.epsilon = epsilon;
        o
    }
}

/// Subtracts `1^T J 1 / (2|E|)` from every stored weight. Entries that land
/// exactly on zero are dropped.
pub fn shift_weights(j: &WeightedGraph) -> Result<WeightedGraph> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("nothing to classify".into()));
    }
    let mean = j.edges().iter().map(|e| e.2).sum::<f64>() / j.num_edges() as f64;
    let shifted = j.edges().iter().map(|&(a, b, w)| (a, b, w - mean)).filter(|e| e.2 != 0.0);
    let g = WeightedGraph::from_edges(j.n(), shifted)?;
    if g.is_empty() {
        return Err(Error::EmptyGraph("all weights equal: the centred graph has no edges".into()));
    }
    Ok(g)
}

/// Centre the weights, estimate `beta_N`, and split the entries of the
/// informative eigenvector of `H_{beta_N}` by 2-means.
pub fn classify_nishimori(j: &WeightedGraph, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("nothing to classify".into()));
    }
    let g = if opts.shift { shift_weights(j)? } else { j.clone() };
    let est = estimate_beta_nishimori(&g, &opts.nishimori)?;
    let x = informative_vector(&g, est.beta_n_hat, opts.nishimori.route, &opts.nishimori.eigen)?;
    let labels = kmeans_1d(&x)?;
    let mut r = ClassificationResult::new(Method::NishimoriBh, Some(est.beta_n_hat), x, labels);
    r.diagnostics.detectable = Some(est.detectable);
    if !est.detectable {
        r.diagnostics.warning = Some("smallest eigenvalue at beta_SG is non-negative: labels are uninformative".into());
    } else if est.capped {
        r.diagnostics.warning = Some("iteration reached beta_th".into());
    }
    r.diagnostics.estimate = Some(est);
    Ok(r)
}

/// Leading eigenvector of `J` (the naive mean-field Hessian `I - beta J`
/// shares its eigenvectors).
pub fn baseline_mean_field(j: &WeightedGraph, eigen: &EigenConfig) -> Result<ClassificationResult> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("nothing to classify".into()));
    }
    let p = largest_eigpair(&adjacency(j), eigen)?;
    let labels = kmeans_1d(&p.vector)?;
    Ok(ClassificationResult::new(Method::MeanField, None, p.vector, labels))
}

/// Smallest eigenvector of `D - J` with `D = diag(|J| 1)`.
pub fn baseline_signed_laplacian(j: &WeightedGraph, eigen: &EigenConfig) -> Result<ClassificationResult> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("nothing to classify".into()));
    }
    let p = smallest_eigpair(&signed_laplacian(j), eigen)?;
    let labels = kmeans_1d(&p.vector)?;
    Ok(ClassificationResult::new(Method::SignedLaplacian, None, p.vector, labels))
}

/// The same pipeline as [`classify_nishimori`] with `beta` fixed at `beta_SG`.
pub fn baseline_spinglass_bh(j: &WeightedGraph, opts: &ClassifyOptions) -> Result<ClassificationResult> {
    if j.is_empty() {
        return Err(Error::EmptyGraph("nothing to classify".into()));
    }
    let g = if opts.shift { shift_weights(j)? } else { j.clone() };
    let beta = estimate_beta_sg(&g)?;
    let x = informative_vector(&g, beta, opts.nishimori.route, &opts.nishimori.eigen)?;
    let labels = kmeans_1d(&x)?;
    Ok(ClassificationResult::new(Method::SpinglassBh, Some(beta), x, labels))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    pub max_sweeps: usize,
    /// Weight of the previous message in each update.
    pub damping: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self { max_sweeps: 500, damping: 0.2, tol: 1e-6, seed: 0 }
    }
}

/// Cavity recursion `m_{i->j} = tanh(sum_{k in di \ j} atanh(tanh(beta J_ik) m_{k->i}))`
/// with synchronous damped updates; labels are the signs of the marginals.
pub fn belief_propagation(j: &WeightedGraph, beta: f64, cfg: &BpConfig) -> Result<ClassificationResult> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    if !(0.0..1.0).contains(&cfg.damping) {
        return Err(Error::InvalidParameter(format!("damping must be in [0, 1), got {}", cfg.damping)));
    }
    let n = j.n();
    let (rp, col, val) = j.csr();
    let m = col.len();
    let mut rev = vec![0; m];
    for i in 0..n {
        for s in rp[i]..rp[i + 1] {
            let k = col[s];
            rev[s] = rp[k] + col[rp[k]..rp[k + 1]].binary_search(&i).expect("symmetric CSR");
        }
    }
    let t: Vec<f64> = val.iter().map(|w| (beta * w).tanh()).collect();
    let mut rng = stream_rng(cfg.seed, streams::BP_INIT);
    // msg[s] for slot s = (i -> k) holds m_{i->k}
    let mut msg: Vec<f64> = (0..m).map(|_| rng.random_range(-0.1..0.1)).collect();
    let clamp = 1.0 - 1e-15;
    let incoming = |msg: &[f64], s: usize| -> f64 {
        // u_{k->i} for slot s = (i -> k): atanh(tanh(beta J_ik) m_{k->i})
        (t[s] * msg[rev[s]]).clamp(-clamp, clamp).atanh()
    };
    let mut converged = false;
    let mut sweeps = 0;
    let mut field = vec![0.0; n];
    let mut next = vec![0.0; m];
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        for i in 0..n {
            field[i] = (rp[i]..rp[i + 1]).map(|s| incoming(&msg, s)).sum();
        }
        let mut delta: f64 = 0.0;
        for i in 0..n {
            for s in rp[i]..rp[i + 1] {
                let upd = (field[i] - incoming(&msg, s)).tanh();
                next[s] = (1.0 - cfg.damping) * upd + cfg.damping * msg[s];
                delta = delta.max((next[s] - msg[s]).abs());
            }
        }
        std::mem::swap(&mut msg, &mut next);
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    let marginals: Vec<f64> =
        (0..n).map(|i| (rp[i]..rp[i + 1]).map(|s| incoming(&msg, s)).sum::<f64>().tanh()).collect();
    let labels = marginals.iter().map(|&v| if v < 0.0 { -1 } else { 1 }).collect();
    let mut r = ClassificationResult::new(Method::BeliefPropagation, Some(beta), marginals, labels);
    r.diagnostics.converged = Some(converged);
    if !converged {
        r.diagnostics.warning = Some(format!("messages did not converge in {sweeps} sweeps"));
    }
    Ok(r)
}

/// Runs one method with default settings; BP runs at the estimated `beta_N`.
pub fn run_method(
    j: &WeightedGraph,
    method: Method,
    opts: &ClassifyOptions,
    bp: &BpConfig,
) -> Result<ClassificationResult> {
    match method {
        Method::NishimoriBh => classify_nishimori(j, opts),
        Method::SpinglassBh => baseline_spinglass_bh(j, opts),
        Method::MeanField => baseline_mean_field(j, &opts.nishimori.eigen),
        Method::SignedLaplacian => baseline_signed_laplacian(j, &opts.nishimori.eigen),
        Method::BeliefPropagation => {
            let g = if opts.shift { shift_weights(j)? } else { j.clone() };
            let beta = estimate_beta_nishimori(&g, &opts.nishimori)?.beta_n_hat;
            belief_propagation(j, beta, bp)
        }
    }
}

/// Scores every result against `sigma`.
pub fn score_all(results: &mut [ClassificationResult], sigma: &[i8]) -> Result<()> {
    for r in results {
        check_labels(sigma, r.labels_hat.len())?;
        r.score(sigma)?;
    }
    Ok(())
}

//! Reproduction harness: spectra of `B`, the `M0` comparison, estimator
//! accuracy sweeps and overlap curves. Every cell is a pure function of its
//! parameters and seed; sweeps run cells in parallel and collect them in
//! grid order.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{overlap, run_method, BpConfig, ClassifyOptions, Method};
use crate::eigen::{symmetric_eigen_sorted, EigenConfig};
use crate::error::{Error, Result};
use crate::generate::{gaussian_j0_for_ratio, planted_instance, Topology};
use crate::graph::WeightedGraph;
use crate::kernel::{dense_kernel_labels, sparsify_kernel, two_cluster_mixture};
use crate::matrices::bethe_hessian;
use crate::nishimori::{estimate_beta_nishimori, NishimoriConfig};
use crate::nonbacktracking::{
    build_M_of_lambda, full_spectrum_B, inner_real_eigenvalue, leading_eigenvalue, m0_eigenvalues_closed_form,
    nearest_eigenvalue, predicted_positions, SpectrumPrediction, SpectrumReport, DEFAULT_DENSE_CAP,
};
use crate::rng::derive_seed;
use crate::weights::{analytic_beta_f, analytic_beta_n, analytic_beta_sg, sample_weights_from, WeightDistribution};

pub const SCHEMA: u32 = 1;

/// Inverse temperature of a spectrum experiment: a number or a multiple of
/// one of the model's transition points (`"10"`, `"n"`, `"sg"`, `"0.5f"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BetaSpec {
    Value(f64),
    Nishimori(f64),
    SpinGlass(f64),
    Ferromagnetic(f64),
}

impl BetaSpec {
    pub fn resolve(&self, law: &WeightDistribution, c: f64) -> Result<f64> {
        match *self {
            BetaSpec::Value(b) => Ok(b),
            BetaSpec::Nishimori(k) => Ok(k * analytic_beta_n(law)?),
            BetaSpec::SpinGlass(k) => Ok(k * analytic_beta_sg(law, c)?),
            BetaSpec::Ferromagnetic(k) => Ok(k * analytic_beta_f(law, c)?),
        }
    }
}

impl FromStr for BetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let split = |suffix: &str| -> Option<Result<f64>> {
            let head = t.strip_suffix(suffix)?;
            Some(if head.is_empty() {
                Ok(1.0)
            } else {
                head.parse().map_err(|_| Error::InvalidParameter(format!("bad beta '{s}'")))
            })
        };
        let spec = if let Some(k) = split("sg") {
            BetaSpec::SpinGlass(k?)
        } else if let Some(k) = split("n") {
            BetaSpec::Nishimori(k?)
        } else if let Some(k) = split("f") {
            BetaSpec::Ferromagnetic(k?)
        } else {
            BetaSpec::Value(t.parse().map_err(|_| Error::InvalidParameter(format!("bad beta '{s}'")))?)
        };
        Ok(spec)
    }
}

impl TryFrom<String> for BetaSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BetaSpec> for String {
    fn from(b: BetaSpec) -> String {
        match b {
            BetaSpec::Value(v) => format!("{v}"),
            BetaSpec::Nishimori(k) => format!("{k}n"),
            BetaSpec::SpinGlass(k) => format!("{k}sg"),
            BetaSpec::Ferromagnetic(k) => format!("{k}f"),
        }
    }
}

/// ER graph with `N(J0, nu^2)` couplings, viewed through `omega = tanh(beta J)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub n: usize,
    pub c: f64,
    pub j0: f64,
    pub nu: f64,
    pub beta: BetaSpec,
    pub seed: u64,
    /// Largest `2|E|` for which the full spectrum is computed densely.
    pub dense_cap: usize,
}

impl SpectrumParams {
    pub fn law(&self) -> Result<WeightDistribution> {
        WeightDistribution::gaussian(self.j0, self.nu)
    }

    /// Coupling graph `J` and the weights `omega`.
    pub fn graphs(&self) -> Result<(WeightedGraph, WeightedGraph, f64)> {
        let law = self.law()?;
        let beta = self.beta.resolve(&law, self.c)?;
        let topo = crate::generate::generate_er(self.n, self.c, self.seed)?;
        let j = sample_weights_from(&topo, &law, self.seed)?;
        let w = j.map_weights(|x| (beta * x).tanh())?;
        Ok((j, w, beta))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseSpectrumSummary {
    pub leading: Complex64,
    pub inner_real: Option<Complex64>,
    pub bulk_radius_empirical: f64,
    /// Fraction of non-real eigenvalues within `1.05 * radius`.
    pub complex_fraction_within: f64,
    pub eigenvalue_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumFigure {
    pub params: SpectrumParams,
    pub beta: f64,
    /// `c E[omega]`, `E[omega^2]/E[omega]`, `sqrt(c E[omega^2])` with empirical moments.
    pub reference: SpectrumPrediction,
    pub leading_power: f64,
    pub inner_real_sparse: Option<f64>,
    /// Smallest eigenvalue of `H_{beta,J}`; absent when `beta max|J|` is
    /// beyond the overflow guard.
    pub gamma_min: Option<f64>,
    pub dense: Option<DenseSpectrumSummary>,
    #[serde(skip)]
    pub report: Option<SpectrumReport>,
}

pub fn reproduce_spectrum_figure(params: &SpectrumParams) -> Result<SpectrumFigure> {
    let (j, w, beta) = params.graphs()?;
    if w.is_empty() {
        return Err(Error::EmptyGraph("spectrum of an empty graph".into()));
    }
    let reference = predicted_positions(&w);
    let eigen = EigenConfig::default().with_seed(params.seed);
    let leading_power = leading_eigenvalue(&w, 1e-10, 100_000, params.seed)?;
    let inner_real_sparse = inner_real_eigenvalue(&w, 200, &eigen)?;
    let gamma_min = match bethe_hessian(&j, beta) {
        Ok(h) => Some(crate::eigen::smallest_eigpair(&h, &eigen)?.value),
        Err(Error::Overflow { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut dense = None;
    let mut report = None;
    if 2 * w.num_edges() <= params.dense_cap {
        let r = full_spectrum_B(&w, params.dense_cap)?;
        dense = Some(DenseSpectrumSummary {
            leading: r.leading,
            inner_real: r.inner_real,
            bulk_radius_empirical: r.bulk_radius_empirical,
            complex_fraction_within: r.complex_fraction_within(1.05 * reference.radius),
            eigenvalue_count: r.all_eigs.len(),
        });
        report = Some(r);
    }
    Ok(SpectrumFigure {
        params: params.clone(),
        beta,
        reference,
        leading_power,
        inner_real_sparse,
        gamma_min,
        dense,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M0Params {
    pub n: usize,
    /// Defaults to `log(n)^2` when absent.
    pub c: Option<f64>,
    pub j0: f64,
    pub nu: f64,
    pub beta: f64,
    pub seed: u64,
    pub dense_cap: usize,
}

impl M0Params {
    pub fn degree(&self) -> f64 {
        self.c.unwrap_or_else(|| (self.n as f64).ln().powi(2))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct M0Figure {
    pub params: M0Params,
    pub reference: SpectrumPrediction,
    /// Eigenvalues of `M0` from the eigenvalues of `W`.
    pub m0_eigs: Vec<Complex64>,
    /// The two isolated real eigenvalues of `M0` (from the top eigenvalue of `W`).
    pub m0_isolated: (f64, f64),
    /// `lambda_1` and `lambda_-1` of `B` from the sparse routes.
    pub b_isolated: (f64, Option<f64>),
    pub relative_gap: (f64, Option<f64>),
    /// Largest distance from an eigenvalue `lambda` of `B` with `|lambda| >= 1`
    /// to the spectrum of `M(lambda)`; only when `B` fits the dense cap.
    pub m_of_lambda_distance: Option<f64>,
}

pub fn reproduce_m0_figure(params: &M0Params) -> Result<M0Figure> {
    let c = params.degree();
    let law = WeightDistribution::gaussian(params.j0, params.nu)?;
    let topo = crate::generate::generate_er(params.n, c, params.seed)?;
    let j = sample_weights_from(&topo, &law, params.seed)?;
    let w = j.map_weights(|x| (params.beta * x).tanh())?;
    if w.is_empty() {
        return Err(Error::EmptyGraph("spectrum of an empty graph".into()));
    }
    let reference = predicted_positions(&w);
    let m2 = w.edges().iter().map(|e| e.2 * e.2).sum::<f64>() / w.num_edges() as f64;
    let s = w.avg_degree() * m2;
    let wd = nalgebra::DMatrix::from_row_slice(w.n(), w.n(), &w.to_dense());
    let (mu, _) = symmetric_eigen_sorted(wd);
    let m0_eigs = m0_eigenvalues_closed_form(&mu, s);
    let top = m0_eigenvalues_closed_form(&mu[mu.len() - 1..], s);
    let m0_isolated = (top[0].re, top[1].re);
    let eigen = EigenConfig::default().with_seed(params.seed);
    let l1 = leading_eigenvalue(&w, 1e-10, 100_000, params.seed)?;
    let lm1 = inner_real_eigenvalue(&w, 200, &eigen)?;
    let relative_gap = ((m0_isolated.0 / l1 - 1.0).abs(), lm1.map(|v| (m0_isolated.1 / v - 1.0).abs()));
    let m_of_lambda_distance = if 2 * w.num_edges() <= params.dense_cap {
        let r = full_spectrum_B(&w, params.dense_cap)?;
        let mut worst: f64 = 0.0;
        for &lam in r.all_eigs.iter().filter(|z| z.norm() >= 1.0) {
            let m = build_M_of_lambda(&w, lam, params.dense_cap)?;
            let d = (nearest_eigenvalue(&m, lam, 1e-14, 100)? - lam).norm();
            worst = worst.max(d);
        }
        Some(worst)
    } else {
        None
    };
    Ok(M0Figure {
        params: params.clone(),
        reference,
        m0_eigs,
        m0_isolated,
        b_isolated: (l1, lm1),
        relative_gap,
        m_of_lambda_distance,
    })
}

/// Sweep of the estimator accuracy over `J0` on Gaussian ER graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorGrid {
    pub n: usize,
    pub c: f64,
    pub nu: f64,
    pub j0: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub topology: Topology,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCell {
    pub j0: f64,
    pub seed: u64,
    pub beta_n: f64,
    pub beta_sg: f64,
    pub beta_n_hat: f64,
    pub beta_sg_hat: f64,
    pub ratio: f64,
    pub detectable: bool,
    pub capped: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorPoint {
    pub j0: f64,
    pub beta_n: f64,
    pub sg_over_n: f64,
    pub ratio_mean: f64,
    pub ratio_std: f64,
    /// Mean of `beta_n_hat / beta_SG_hat`.
    pub over_sg_mean: f64,
    pub detectable_fraction: f64,
    pub capped_fraction: f64,
}

pub fn estimator_cell(grid: &EstimatorGrid, j0: f64, seed: u64) -> Result<EstimatorCell> {
    let law = WeightDistribution::gaussian(j0, grid.nu)?;
    let inst = planted_instance(grid.topology, grid.n, grid.c, &law, seed)?;
    let cfg =
        NishimoriConfig { epsilon: grid.epsilon, eigen: EigenConfig::default().with_seed(seed), ..Default::default() };
    let est = estimate_beta_nishimori(&inst.graph, &cfg)?;
    let beta_n = analytic_beta_n(&law)?;
    Ok(EstimatorCell {
        j0,
        seed,
        beta_n,
        beta_sg: analytic_beta_sg(&law, grid.c)?,
        beta_n_hat: est.beta_n_hat,
        beta_sg_hat: est.beta_sg_hat,
        ratio: est.beta_n_hat / beta_n,
        detectable: est.detectable,
        capped: est.capped,
        iterations: est.iterations.len(),
    })
}

pub fn reproduce_estimator_figure(grid: &EstimatorGrid) -> Result<(Vec<EstimatorCell>, Vec<EstimatorPoint>)> {
    let coords: Vec<(f64, u64)> = grid
        .j0
        .iter()
        .flat_map(|&j0| (0..grid.seeds as u64).map(move |s| (j0, derive_seed(grid.base_seed, s))))
        .collect();
    let cells = coords.par_iter().map(|&(j0, seed)| estimator_cell(grid, j0, seed)).collect::<Result<Vec<_>>>()?;
    let points = grid
        .j0
        .iter()
        .map(|&j0| {
            let group: Vec<&EstimatorCell> = cells.iter().filter(|c| c.j0 == j0).collect();
            let ratios: Vec<f64> = group.iter().map(|c| c.ratio).collect();
            let (m, s) = mean_std(&ratios);
            let k = group.len() as f64;
            EstimatorPoint {
                j0,
                beta_n: group[0].beta_n,
                sg_over_n: group[0].beta_sg / group[0].beta_n,
                ratio_mean: m,
                ratio_std: s,
                over_sg_mean: group.iter().map(|c| c.beta_n_hat / c.beta_sg_hat).sum::<f64>() / k,
                detectable_fraction: group.iter().filter(|c| c.detectable).count() as f64 / k,
                capped_fraction: group.iter().filter(|c| c.capped).count() as f64 / k,
            }
        })
        .collect();
    Ok((cells, points))
}

/// Overlap of several methods on planted Gaussian instances, on a grid of
/// `beta_N / beta_SG` ratios and degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapGrid {
    pub n: usize,
    pub c: Vec<f64>,
    pub nu: f64,
    pub ratios: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub topology: Topology,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCell {
    pub c: f64,
    pub ratio: f64,
    pub seed: u64,
    pub method: Method,
    pub overlap: f64,
    pub beta_used: Option<f64>,
    pub detectable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint {
    pub c: f64,
    pub ratio: f64,
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn overlap_cells(grid: &OverlapGrid, c: f64, ratio: f64, seed: u64) -> Result<Vec<OverlapCell>> {
    let j0 = gaussian_j0_for_ratio(ratio, grid.nu, c)?;
    let law = WeightDistribution::gaussian(j0, grid.nu)?;
    let inst = planted_instance(grid.topology, grid.n, c, &law, seed)?;
    let mut opts = ClassifyOptions::default();
    opts.nishimori.eigen = opts.nishimori.eigen.with_seed(seed);
    let bp = BpConfig { seed, ..Default::default() };
    grid.methods
        .iter()
        .map(|&m| {
            let r = run_method(&inst.graph, m, &opts, &bp)?;
            Ok(OverlapCell {
                c,
                ratio,
                seed,
                method: m,
                overlap: overlap(&inst.labels, &r.labels_hat)?,
                beta_used: r.beta_used,
                detectable: r.diagnostics.detectable,
            })
        })
        .collect()
}

pub fn reproduce_overlap_figure(grid: &OverlapGrid) -> Result<(Vec<OverlapCell>, Vec<OverlapPoint>)> {
    let mut coords = Vec::new();
    for &c in &grid.c {
        for &r in &grid.ratios {
            for s in 0..grid.seeds as u64 {
                coords.push((c, r, derive_seed(grid.base_seed, s)));
            }
        }
    }
    let cells: Vec<OverlapCell> = coords
        .par_iter()
        .map(|&(c, r, s)| overlap_cells(grid, c, r, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok((cells.clone(), summarize_overlaps(&cells, &grid.c, &grid.ratios, &grid.methods)))
}

fn summarize_overlaps(cells: &[OverlapCell], cs: &[f64], ratios: &[f64], methods: &[Method]) -> Vec<OverlapPoint> {
    let mut out = Vec::new();
    for &c in cs {
        for &ratio in ratios {
            for &method in methods {
                let v: Vec<f64> = cells
                    .iter()
                    .filter(|x| x.c == c && x.ratio == ratio && x.method == method)
                    .map(|x| x.overlap)
                    .collect();
                let (mean, std) = mean_std(&v);
                out.push(OverlapPoint { c, ratio, method, mean, std, count: v.len() });
            }
        }
    }
    out
}

/// Sparsified-kernel classification of a two-cluster feature mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub n: usize,
    pub p: usize,
    pub separation: f64,
    /// Defaults to `p` (no feature masking).
    pub kappa: Option<f64>,
    pub c: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCell {
    pub c: f64,
    pub seed: u64,
    pub method: Method,
    pub overlap: f64,
    /// Overlap of the full dense kernel on the same features.
    pub dense_overlap: f64,
}

pub fn reproduce_kernel_figure(grid: &KernelGrid) -> Result<(Vec<KernelCell>, Vec<OverlapPoint>)> {
    let kappa = grid.kappa.unwrap_or(grid.p as f64);
    let mut coords = Vec::new();
    for &c in &grid.c {
        for s in 0..grid.seeds as u64 {
            coords.push((c, derive_seed(grid.base_seed, s)));
        }
    }
    let cells: Vec<KernelCell> = coords
        .par_iter()
        .map(|&(c, seed)| -> Result<Vec<KernelCell>> {
            let data = two_cluster_mixture(grid.n, grid.p, grid.separation, seed)?;
            let sigma = data.labels.clone().expect("mixture is labelled");
            let dense_overlap = overlap(&sigma, &dense_kernel_labels(&data)?)?;
            let g = sparsify_kernel(&data, kappa, c, seed)?;
            let mut opts = ClassifyOptions::default();
            opts.nishimori.eigen = opts.nishimori.eigen.with_seed(seed);
            let bp = BpConfig { seed, ..Default::default() };
            grid.methods
                .iter()
                .map(|&m| {
                    let r = run_method(&g, m, &opts, &bp)?;
                    Ok(KernelCell { c, seed, method: m, overlap: overlap(&sigma, &r.labels_hat)?, dense_overlap })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let as_overlap: Vec<OverlapCell> = cells
        .iter()
        .map(|k| OverlapCell {
            c: k.c,
            ratio: f64::NAN,
            seed: k.seed,
            method: k.method,
            overlap: k.overlap,
            beta_used: None,
            detectable: None,
        })
        .collect();
    let mut points = Vec::new();
    for &c in &grid.c {
        for &method in &grid.methods {
            let v: Vec<f64> = as_overlap.iter().filter(|x| x.c == c && x.method == method).map(|x| x.overlap).collect();
            let (mean, std) = mean_std(&v);
            points.push(OverlapPoint { c, ratio: f64::NAN, method, mean, std, count: v.len() });
        }
    }
    Ok((cells, points))
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// One reproduction job, as read from a grid JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "figure", rename_all = "snake_case")]
pub enum Experiment {
    Spectrum(SpectrumParams),
    M0(M0Params),
    Estimator(EstimatorGrid),
    Overlap(OverlapGrid),
    Kernel(KernelGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub output_dir: PathBuf,
}

/// Figure presets. `full_size` switches to the sizes of the original
/// experiments where they differ from the desk defaults.
pub fn preset(id: &str, full_size: bool) -> Result<Experiment> {
    let all = || Method::ALL.to_vec();
    let e = match id {
        "fig2-left" | "fig2_left" => Experiment::Spectrum(SpectrumParams {
            n: 250,
            c: 2.0 * (250f64).ln().powi(2),
            j0: 1.0,
            nu: 4.0,
            beta: BetaSpec::Value(1.0),
            seed: 1,
            dense_cap: 20_000,
        }),
        "fig2" | "fig2-right" | "fig2_right" => Experiment::Spectrum(SpectrumParams {
            n: if full_size { 3000 } else { 400 },
            c: 5.0,
            j0: 1.0,
            nu: 1.0,
            beta: BetaSpec::Value(10.0),
            seed: 1,
            dense_cap: if full_size { 20_000 } else { DEFAULT_DENSE_CAP },
        }),
        "fig3" => Experiment::M0(M0Params {
            n: if full_size { 1500 } else { 500 },
            c: None,
            j0: 1.0,
            nu: 3.0,
            beta: 1.0,
            seed: 1,
            dense_cap: DEFAULT_DENSE_CAP,
        }),
        "fig4" => Experiment::Spectrum(SpectrumParams {
            n: 1000,
            c: 10.0,
            j0: 1.0,
            nu: 1.5,
            beta: BetaSpec::Nishimori(1.0),
            seed: 1,
            dense_cap: DEFAULT_DENSE_CAP,
        }),
        "fig5" => Experiment::Estimator(EstimatorGrid {
            n: 10_000,
            c: 5.0,
            nu: 3.5,
            j0: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            seeds: 10,
            base_seed: 1,
            topology: Topology::ErdosRenyi,
            epsilon: 1e-5,
        }),
        "fig6" => Experiment::Overlap(OverlapGrid {
            n: if full_size { 30_000 } else { 10_000 },
            c: vec![3.0, 15.0, 50.0],
            nu: 1.0,
            ratios: vec![0.8, 1.2, 1.6, 2.0, 3.0],
            seeds: 10,
            base_seed: 1,
            topology: Topology::ErdosRenyi,
            methods: all(),
        }),
        "fig-degree" | "degree" => Experiment::Overlap(OverlapGrid {
            n: if full_size { 30_000 } else { 10_000 },
            c: vec![10.0],
            nu: 1.0,
            ratios: vec![1.2, 1.6, 2.0, 3.0, 3.6],
            seeds: 10,
            base_seed: 1,
            topology: Topology::PowerLaw { exponent: 3.0 },
            methods: vec![Method::NishimoriBh, Method::SpinglassBh],
        }),
        "fig7" | "kernel" => Experiment::Kernel(KernelGrid {
            n: if full_size { 40_000 } else { 4000 },
            p: 64,
            separation: 3.0,
            kappa: None,
            c: vec![3.0, 5.0, 10.0],
            seeds: 10,
            base_seed: 1,
            methods: vec![Method::NishimoriBh, Method::MeanField, Method::SignedLaplacian],
        }),
        _ => return Err(Error::InvalidParameter(format!("unknown figure id '{id}'"))),
    };
    Ok(e)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub elapsed_seconds: f64,
    pub threads: usize,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            outputs: Vec::new(),
            elapsed_seconds: 0.0,
            threads: rayon::current_num_threads(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Runs a job and writes its CSV/JSON outputs plus `manifest.json` into
/// `output_dir`. Returns the manifest.
pub fn run_experiment(grid: &ExperimentGrid) -> Result<Manifest> {
    let start = Instant::now();
    let dir = &grid.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new("reproduce", serde_json::to_value(grid)?);
    let mut outputs = Vec::new();
    let mut emit = |name: &str| {
        outputs.push(name.to_string());
        dir.join(name)
    };
    match &grid.experiment {
        Experiment::Spectrum(p) => {
            let fig = reproduce_spectrum_figure(p)?;
            if let Some(r) = &fig.report {
                std::fs::write(emit("spectrum.csv"), r.to_csv())?;
            }
            write_json(&emit("summary.json"), &fig)?;
        }
        Experiment::M0(p) => {
            let fig = reproduce_m0_figure(p)?;
            #[derive(Serialize)]
            struct Row {
                re: f64,
                im: f64,
            }
            let rows: Vec<Row> = fig.m0_eigs.iter().map(|z| Row { re: z.re, im: z.im }).collect();
            write_csv(&emit("m0_spectrum.csv"), &rows)?;
            write_json(&emit("summary.json"), &fig)?;
        }
        Experiment::Estimator(g) => {
            let (cells, points) = reproduce_estimator_figure(g)?;
            write_csv(&emit("cells.csv"), &cells)?;
            write_csv(&emit("ratio_curve.csv"), &points)?;
        }
        Experiment::Overlap(g) => {
            let (cells, points) = reproduce_overlap_figure(g)?;
            write_csv(&emit("cells.csv"), &cells)?;
            write_csv(&emit("overlap_curves.csv"), &points)?;
        }
        Experiment::Kernel(g) => {
            let (cells, points) = reproduce_kernel_figure(g)?;
            write_csv(&emit("cells.csv"), &cells)?;
            write_csv(&emit("overlap_curves.csv"), &points)?;
        }
    }
    manifest.outputs = outputs;
    manifest.elapsed_seconds = start.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_spec_parsing() {
        assert_eq!("10".parse::<BetaSpec>().unwrap(), BetaSpec::Value(10.0));
        assert_eq!("n".parse::<BetaSpec>().unwrap(), BetaSpec::Nishimori(1.0));
        assert_eq!("0.5f".parse::<BetaSpec>().unwrap(), BetaSpec::Ferromagnetic(0.5));
        assert_eq!("sg".parse::<BetaSpec>().unwrap(), BetaSpec::SpinGlass(1.0));
        assert!("x".parse::<BetaSpec>().is_err());
        let law = WeightDistribution::gaussian(1.0, 1.5).unwrap();
        assert!((BetaSpec::Nishimori(1.0).resolve(&law, 10.0).unwrap() - 1.0 / 2.25).abs() < 1e-15);
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn presets_exist_and_serialize() {
        for id in ["fig2", "fig2-left", "fig3", "fig4", "fig5", "fig6", "degree", "kernel"] {
            let e = preset(id, false).unwrap();
            let g = ExperimentGrid { experiment: e, output_dir: "out".into() };
            let back: ExperimentGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
            assert_eq!(back, g);
        }
        assert!(preset("fig99", false).is_err());
    }

    #[test]
    fn estimator_cells_are_reproducible() {
        let grid = EstimatorGrid {
            n: 1500,
            c: 5.0,
            nu: 1.0,
            j0: vec![1.5],
            seeds: 2,
            base_seed: 3,
            topology: Topology::ErdosRenyi,
            epsilon: 1e-5,
        };
        let (a, pa) = reproduce_estimator_figure(&grid).unwrap();
        let (b, _) = reproduce_estimator_figure(&grid).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa.len(), 1);
        assert_ne!(a[0].seed, a[1].seed);
    }

    #[test]
    fn small_dense_m0_run() {
        let p = M0Params { n: 60, c: Some(8.0), j0: 1.0, nu: 1.0, beta: 1.0, seed: 2, dense_cap: 2000 };
        let fig = reproduce_m0_figure(&p).unwrap();
        assert_eq!(fig.m0_eigs.len(), 120);
        assert!(fig.m_of_lambda_distance.unwrap() < 1e-6);
    }

    #[test]
    fn run_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let grid = ExperimentGrid {
            experiment: Experiment::Spectrum(SpectrumParams {
                n: 120,
                c: 4.0,
                j0: 1.0,
                nu: 1.0,
                beta: BetaSpec::Value(2.0),
                seed: 1,
                dense_cap: 2000,
            }),
            output_dir: dir.path().to_path_buf(),
        };
        let m = run_experiment(&grid).unwrap();
        assert_eq!(m.outputs, vec!["spectrum.csv", "summary.json"]);
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        let again: ExperimentGrid = serde_json::from_value(back.config).unwrap();
        assert_eq!(again, grid);
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nishibethe::classify::{overlap, run_method, BpConfig, ClassifyOptions, Method};
use nishibethe::generate::{gaussian_j0_for_ratio, planted_instance, Topology};
use nishibethe::graph::{labels_to_string, load_labels};
use nishibethe::kernel::{sparsify_kernel, two_cluster_mixture, FeatureDataset};
use nishibethe::nishimori::{estimate_beta_nishimori, NishimoriConfig, Route};
use nishibethe::validate::{preset, run_experiment, Experiment, ExperimentGrid, Manifest, SCHEMA};
use nishibethe::{Error, WeightDistribution, WeightedGraph};

#[derive(Parser, Debug)]
#[command(name = "nishibethe", version, about = "Nishimori temperature estimation and Bethe-Hessian classification")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a planted instance: edge list, labels and manifest.
    Generate(GenerateArgs),
    /// Generate a two-cluster feature mixture.
    Features(FeaturesArgs),
    /// Estimate the Nishimori temperature of a weighted graph.
    Estimate(EstimateArgs),
    /// Classify the nodes of a weighted graph into two classes.
    Classify(ClassifyArgs),
    /// Build a sparsified correlation-kernel graph from feature vectors.
    Kernel(KernelArgs),
    /// Reproduce a figure from a preset id or a grid JSON file.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Model {
    Gaussian,
    Pmj,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TopologyArg {
    Er,
    Powerlaw,
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    model: Model,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    c: f64,
    #[arg(long, value_enum, default_value = "er")]
    topology: TopologyArg,
    /// Power-law exponent (power-law topology only).
    #[arg(long, default_value_t = 3.0)]
    exponent: f64,
    #[arg(long = "J0", alias = "j0", default_value_t = 1.0)]
    j0: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Probability of a positive coupling (pmj model).
    #[arg(long, default_value_t = 0.75)]
    p: f64,
    /// Gaussian model: choose J0 so that beta_N / beta_SG equals this value.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct FeaturesArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum RouteArg {
    Auto,
    Hessian,
    Laplacian,
    Signed,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Route {
        match r {
            RouteArg::Auto => Route::Auto,
            RouteArg::Hessian => Route::Hessian,
            RouteArg::Laplacian => Route::Laplacian,
            RouteArg::Signed => Route::Signed,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// beta_th = cap_factor * sqrt(c) * beta_SG.
    #[arg(long, default_value_t = 2.0)]
    cap_factor: f64,
    #[arg(long, value_enum, default_value = "auto")]
    route: RouteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> NishimoriConfig {
        let mut cfg = NishimoriConfig {
            epsilon: self.epsilon,
            cap_factor: self.cap_factor,
            route: self.route.into(),
            ..Default::default()
        };
        cfg.eigen = cfg.eigen.with_seed(self.seed);
        cfg
    }
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    /// Edge-list file.
    graph: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write JSON here instead of stdout (a manifest is written next to it).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    graph: PathBuf,
    /// nishimori, spinglass, mean_field, signed_laplacian, bp, or all.
    #[arg(long, default_value = "nishimori")]
    method: String,
    /// Ground-truth labels; adds the overlap to each result.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Do not centre the weights before estimating beta_N.
    #[arg(long)]
    no_shift: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the predicted labels, one per line.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    features: PathBuf,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReproduceArgs {
    /// fig2, fig2-left, fig3, fig4, fig5, fig6, degree or kernel.
    figure: Option<String>,
    /// Grid JSON file; overrides the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Large-scale sizes instead of the desk defaults.
    #[arg(long)]
    full_size: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "reproduce-out")]
    out: PathBuf,
}

type CliResult<T> = Result<T, Error>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Features(a) => cmd_features(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: &impl Serialize,
    outputs: Vec<String>,
    start: Instant,
) -> CliResult<()> {
    let mut m = Manifest::new(command, serde_json::to_value(config)?);
    m.outputs = outputs;
    m.elapsed_seconds = start.elapsed().as_secs_f64();
    m.write(dir)?;
    Ok(())
}

/// Writes `value` to `out` (plus `<out>.manifest.json`) or to stdout.
fn emit_json(
    out: Option<&Path>,
    command: &str,
    config: &impl Serialize,
    value: serde_json::Value,
    start: Instant,
) -> CliResult<()> {
    let text = serde_json::to_string_pretty(&value)?;
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            let mut m = Manifest::new(command, serde_json::to_value(config)?);
            m.outputs = vec![path.display().to_string()];
            m.elapsed_seconds = start.elapsed().as_secs_f64();
            let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
            std::fs::write(mpath, serde_json::to_string_pretty(&m)?)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let start = Instant::now();
    let topology = match a.topology {
        TopologyArg::Er => Topology::ErdosRenyi,
        TopologyArg::Powerlaw => Topology::PowerLaw { exponent: a.exponent },
    };
    let law = match a.model {
        Model::Gaussian => {
            let j0 = match a.ratio {
                Some(r) => gaussian_j0_for_ratio(r, a.nu, a.c)?,
                None => a.j0,
            };
            WeightDistribution::gaussian(j0, a.nu)?
        }
        Model::Pmj => {
            if a.ratio.is_some() {
                return Err(Error::InvalidParameter("--ratio applies to the gaussian model only".into()));
            }
            WeightDistribution::plus_minus_j(a.p, a.j0)?
        }
    };
    let inst = planted_instance(topology, a.n, a.c, &law, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    inst.graph.save_edge_list(a.out.join("graph.tsv"))?;
    std::fs::write(a.out.join("labels.txt"), labels_to_string(&inst.labels))?;
    let config = json!({ "args": a, "law": law, "true_beta_n": inst.true_beta_n });
    write_manifest(&a.out, "generate", &config, vec!["graph.tsv".into(), "labels.txt".into()], start)
}

fn cmd_features(a: &FeaturesArgs) -> CliResult<()> {
    let start = Instant::now();
    let d = two_cluster_mixture(a.n, a.p, a.separation, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    d.save(a.out.join("features.txt"))?;
    std::fs::write(a.out.join("labels.txt"), labels_to_string(d.labels.as_deref().unwrap_or_default()))?;
    write_manifest(&a.out, "features", a, vec!["features.txt".into(), "labels.txt".into()], start)
}

fn load_graph(path: &Path) -> CliResult<WeightedGraph> {
    WeightedGraph::load_edge_list(path).map_err(|e| {
        if let Error::Io(io) = e {
            Error::InvalidParameter(format!("{}: {io}", path.display()))
        } else {
            e
        }
    })
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult<()> {
    let start = Instant::now();
    let g = load_graph(&a.graph)?;
    let cfg = a.solver.config();
    let est = estimate_beta_nishimori(&g, &cfg)?;
    let mut value = serde_json::to_value(&est)?;
    value["schema"] = json!(SCHEMA);
    if a.out.is_none() {
        value["config"] = json!({ "args": a, "solver": cfg });
    }
    emit_json(a.out.as_deref(), "estimate", &json!({ "args": a, "solver": cfg }), value, start)
}

fn cmd_classify(a: &ClassifyArgs) -> CliResult<()> {
    let start = Instant::now();
    let methods: Vec<Method> = if a.method == "all" { Method::ALL.to_vec() } else { vec![a.method.parse()?] };
    let g = load_graph(&a.graph)?;
    let labels = match &a.labels {
        Some(p) => Some(load_labels(p)?),
        None => None,
    };
    if let Some(l) = &labels {
        if l.len() != g.n() {
            return Err(Error::Dimension { expected: g.n(), got: l.len() });
        }
    }
    let opts = ClassifyOptions { shift: !a.no_shift, nishimori: a.solver.config() };
    let bp = BpConfig { seed: a.solver.seed, ..Default::default() };
    let mut results = Vec::new();
    for m in methods {
        let mut r = run_method(&g, m, &opts, &bp)?;
        if let Some(l) = &labels {
            r.overlap = Some(overlap(l, &r.labels_hat)?);
        }
        results.push(r);
    }
    if let (Some(path), Some(first)) = (&a.labels_out, results.first()) {
        std::fs::write(path, labels_to_string(&first.labels_hat))?;
    }
    let config = json!({ "args": a, "options": opts, "bp": bp });
    let mut value = json!({ "schema": SCHEMA, "results": results });
    if a.out.is_none() {
        value["config"] = config.clone();
    }
    emit_json(a.out.as_deref(), "classify", &config, value, start)
}

fn cmd_kernel(a: &KernelArgs) -> CliResult<()> {
    let start = Instant::now();
    let d = FeatureDataset::load(&a.features)?;
    let kappa = a.kappa.unwrap_or(d.p() as f64);
    let g = sparsify_kernel(&d, kappa, a.c, a.seed)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    g.save_edge_list(&a.out)?;
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let config = json!({ "args": a, "kappa": kappa, "n": d.n(), "p": d.p(), "edges": g.num_edges() });
    let name = a.out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    write_manifest(dir, "kernel", &config, vec![name], start)
}

fn cmd_reproduce(a: &ReproduceArgs) -> CliResult<()> {
    let mut grid = match (&a.config, &a.figure) {
        (Some(path), _) => serde_json::from_str::<ExperimentGrid>(&std::fs::read_to_string(path)?)?,
        (None, Some(id)) => ExperimentGrid { experiment: preset(id, a.full_size)?, output_dir: a.out.clone() },
        (None, None) => return Err(Error::InvalidParameter("give a figure id or --config".into())),
    };
    if a.config.is_some() && a.out.as_os_str() != "reproduce-out" {
        grid.output_dir = a.out.clone();
    }
    apply_overrides(&mut grid.experiment, a);
    let m = run_experiment(&grid)?;
    eprintln!("wrote {} files to {} in {:.1}s", m.outputs.len() + 1, grid.output_dir.display(), m.elapsed_seconds);
    Ok(())
}

fn apply_overrides(e: &mut Experiment, a: &ReproduceArgs) {
    match e {
        Experiment::Spectrum(p) => {
            if let Some(n) = a.n {
                p.n = n;
            }
            if let Some(s) = a.seed {
                p.seed = s;
            }
        }
        Experiment::M0(p) => {
            if let Some(n) = a.n {
                p.n = n;
            }
            if let Some(s) = a.seed {
                p.seed = s;
            }
        }
        Experiment::Estimator(g) => {
            if let Some(n) = a.n {
                g.n = n;
            }
            if let Some(s) = a.seeds {
                g.seeds = s;
            }
            if let Some(s) = a.seed {
                g.base_seed = s;
            }
        }
        Experiment::Overlap(g) => {
            if let Some(n) = a.n {
                g.n = n;
            }
            if let Some(s) = a.seeds {
                g.seeds = s;
            }
            if let Some(s) = a.seed {
                g.base_seed = s;
            }
        }
        Experiment::Kernel(g) => {
            if let Some(n) = a.n {
                g.n = n;
            }
            if let Some(s) = a.seeds {
                g.seeds = s;
            }
            if let Some(s) = a.seed {
                g.base_seed = s;
            }
        }
    }
}

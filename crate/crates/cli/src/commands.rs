//! Subcommand bodies. Every command reads and validates all inputs and computes
//! all outputs in memory before the first file is written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fermat_core::density::{self, HeldoutMode};
use fermat_core::discrete::{self, empirical_joint};
use fermat_core::nalgebra::DMatrix;
use fermat_core::pipeline::{self, GaussianScoreInput};
use fermat_core::{
    mst, mtg, recovery_metrics, run_greedy, ContinuousDataset, ExperimentConfig, Graph, GraphPattern, Learner, MetricMatrix,
    MetricMethod, RecoveryMetrics,
};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Kind};
use crate::formats::{self, Dataset};
use crate::Common;

fn resolve(out: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(Kind::Io, format!("cannot read {}: {e}", path.display())))
}

/// Output files held in memory until every computation has succeeded.
struct Staged {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    fn new(dir: &Path) -> Staged {
        Staged {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl AsRef<Path>, content: impl Into<Vec<u8>>) {
        self.files.push((resolve(&self.dir, name.as_ref()), content.into()));
    }

    /// Each file goes to a hidden sibling first and is renamed into place.
    fn commit(self) -> Result<(), Failure> {
        let io = |path: &Path, e: std::io::Error| Failure::new(Kind::Io, format!("cannot write {}: {e}", path.display()));
        for (path, content) in self.files {
            let parent = path.parent().unwrap_or(Path::new("."));
            fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let tmp = parent.join(format!(".{name}.tmp"));
            fs::write(&tmp, &content).map_err(|e| io(&tmp, e))?;
            fs::rename(&tmp, &path).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut line = serde_json::to_string(value).map_err(|e| Failure::new(Kind::Compute, e.to_string()))?;
    line.push('\n');
    Ok(line)
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::new(Kind::Compute, e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn invalid_config(message: impl Into<String>) -> Failure {
    Failure::new(Kind::Config, message)
}

/// Config file (if any) with command-line overrides applied. Not yet validated.
fn experiment_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut c = match &common.config {
        Some(p) => {
            let path = resolve(&common.out, p);
            serde_json::from_str(&read_text(&path)?)
                .map_err(|e| invalid_config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = common.seed {
        c.seed = v;
    }
    if let Some(p) = &common.pattern {
        c.pattern = serde_json::from_str::<GraphPattern>(p).map_err(|e| invalid_config(format!("--pattern: {e}")))?;
    }
    if let Some(v) = common.n_train {
        c.n_train = v;
    }
    if let Some(v) = common.n_heldout {
        c.n_heldout = v;
    }
    if let Some(v) = common.distortion {
        c.distortion = v.into();
    }
    if let Some(v) = common.box_cox_nu {
        c.box_cox_nu = v;
    }
    if let Some(v) = common.method {
        c.method = v.into();
    }
    if let Some(v) = common.learner {
        c.learner = v.into();
    }
    if let Some(v) = common.replications {
        c.replications = v;
    }
    if let Some(v) = common.kernel {
        c.copula.kernel = v;
        c.density.kernel = v;
    }
    if let Some(v) = common.grid {
        c.copula.grid = v;
    }
    if let Some(v) = common.c0 {
        c.copula.c0 = v;
    }
    if common.bandwidth.is_some() {
        c.copula.bandwidth = common.bandwidth;
    }
    if let Some(v) = common.kappa1 {
        c.copula.kappa1 = v;
    }
    if let Some(v) = common.kappa2 {
        c.copula.kappa2 = v;
    }
    if common.plugin_bandwidth.is_some() {
        c.plugin_bandwidth = common.plugin_bandwidth;
    }
    if let Some(v) = common.c1 {
        c.density.c1 = v;
    }
    if let Some(v) = common.c2 {
        c.density.c2 = v;
    }
    if common.entropy_bandwidth.is_some() {
        c.entropy_bandwidth = common.entropy_bandwidth;
    }
    Ok(c)
}

fn read_dataset(common: &Common, p: &Path) -> Result<Dataset, Failure> {
    let path = resolve(&common.out, p);
    formats::read_dataset(&read_text(&path)?).map_err(|f| Failure::new(f.kind, format!("{}: {}", path.display(), f.message)))
}

fn read_metric(common: &Common, p: &Path) -> Result<MetricMatrix, Failure> {
    let path = resolve(&common.out, p);
    formats::read_metric(&read_text(&path)?).map_err(|f| Failure::new(f.kind, format!("{}: {}", path.display(), f.message)))
}

fn read_edges(common: &Common, p: &Path, d: usize) -> Result<Graph, Failure> {
    let path = resolve(&common.out, p);
    formats::read_edges(&read_text(&path)?, Some(d)).map_err(|f| Failure::new(f.kind, format!("{}: {}", path.display(), f.message)))
}

fn same_dim(what: &str, expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(Failure::new(
            Kind::InvalidInput,
            format!("{what} has dimension {got}, expected {expected}"),
        ));
    }
    Ok(())
}

/// `mu` and `omega` of a Gaussian model. Extra keys are ignored so that
/// `model.json` from `generate` can be passed directly.
#[derive(Debug, Serialize, Deserialize)]
struct PrecisionFile {
    mu: Vec<f64>,
    omega: Vec<Vec<f64>>,
}

fn read_precision(common: &Common, p: &Path, d: usize) -> Result<GaussianScoreInput, Failure> {
    let path = resolve(&common.out, p);
    let file: PrecisionFile = serde_json::from_str(&read_text(&path)?)
        .map_err(|e| Failure::new(Kind::Parse, format!("{}: {e}", path.display())))?;
    same_dim("precision mean", d, file.mu.len())?;
    same_dim("precision matrix", d, file.omega.len())?;
    if let Some(row) = file.omega.iter().find(|r| r.len() != d) {
        same_dim("precision matrix row", d, row.len())?;
    }
    let omega = DMatrix::from_fn(d, d, |i, j| file.omega[i][j]);
    if omega.iter().chain(&file.mu).any(|v| !v.is_finite()) {
        return Err(Failure::new(Kind::InvalidInput, format!("{}: non-finite entry", path.display())));
    }
    Ok(GaussianScoreInput { mu: file.mu, omega })
}

#[derive(Debug, Serialize)]
struct ModelFile {
    seed: u64,
    replication: usize,
    mu: Vec<f64>,
    omega: Vec<Vec<f64>>,
    truth_edges: Vec<[usize; 2]>,
}

fn edge_pairs(g: &Graph) -> Vec<[usize; 2]> {
    g.edges().map(|e| [e.i, e.j]).collect()
}

pub fn generate(common: &Common, replication: usize) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    config.validate()?;
    let data = pipeline::generate(&config, replication)?;
    let d = data.truth.dim();
    let model = ModelFile {
        seed: config.replication_seed(replication),
        replication,
        mu: data.model.mu.clone(),
        omega: (0..d).map(|i| (0..d).map(|j| data.model.omega[(i, j)]).collect()).collect(),
        truth_edges: edge_pairs(&data.truth),
    };
    let mut out = Staged::new(&common.out);
    out.add("train.csv", formats::write_continuous(&data.train));
    out.add("heldout.csv", formats::write_continuous(&data.heldout));
    out.add("truth.edges", formats::write_edges(&data.truth));
    out.add("model.json", json_pretty(&model)?);
    out.commit()
}

pub fn metric(common: &Common, data: &Path, raw_distance: bool, output: &Path) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    if raw_distance && config.method != MetricMethod::Discrete {
        return Err(Failure::new(Kind::Usage, "--raw-distance applies only to --method discrete"));
    }
    let dataset = read_dataset(common, data)?;
    let m = match config.method {
        MetricMethod::Discrete => {
            let Dataset::Discrete(ds) = &dataset else {
                return Err(Failure::new(
                    Kind::InvalidInput,
                    "the discrete metric needs a discrete dataset (a '# alphabet=s' line and integer labels)",
                ));
            };
            if raw_distance {
                MetricMatrix::from_fn(ds.dim(), |i, j| discrete::info_distance(&empirical_joint(ds, i, j)))
            } else {
                discrete::discrete_metric_matrix(ds)
            }
        }
        MetricMethod::CopulaMi | MetricMethod::PluginMi => {
            config.copula.validate()?;
            pipeline::estimate_metric(&dataset.to_continuous()?, &config)?
        }
    };
    let mut out = Staged::new(&common.out);
    out.add(output, formats::write_metric(&m));
    out.commit()
}

#[derive(Debug, Serialize)]
struct LearnRecord {
    learner: Learner,
    d: usize,
    edges: usize,
    truth_edges: usize,
    truth_triangle_free: bool,
    recovery: RecoveryMetrics,
}

fn learned(m: &MetricMatrix, learner: Learner) -> Result<Graph, Failure> {
    let g = match learner {
        Learner::Mst => mst(m),
        Learner::Mtg => mtg(m),
    };
    let ok = match learner {
        Learner::Mst => g.is_acyclic(),
        Learner::Mtg => g.is_triangle_free(),
    };
    if !ok {
        return Err(Failure::new(Kind::Compute, format!("{learner:?} output failed its structural check")));
    }
    Ok(g)
}

pub fn learn(common: &Common, metric: &Path, truth: Option<&Path>, output: &Path) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    let m = read_metric(common, metric)?;
    let truth = truth.map(|t| read_edges(common, t, m.dim())).transpose()?;
    let g = learned(&m, config.learner)?;
    let mut out = Staged::new(&common.out);
    out.add(output, formats::write_edges(&g));
    if let Some(truth) = truth {
        let log = resolve(&common.out, Path::new("learn.jsonl"));
        let mut text = if log.exists() { read_text(&log)? } else { String::new() };
        text.push_str(&json_line(&LearnRecord {
            learner: config.learner,
            d: g.dim(),
            edges: g.edge_count(),
            truth_edges: truth.edge_count(),
            truth_triangle_free: truth.is_triangle_free(),
            recovery: recovery_metrics(&g, &truth),
        })?);
        out.add("learn.jsonl", text);
    }
    out.commit()
}

#[derive(Debug, Serialize)]
struct PruneRecord {
    learner: Learner,
    trace_len: usize,
    k_hat: usize,
    argmax_set: Vec<usize>,
    objective_per_k: Vec<f64>,
    pruned_edges: Vec<[usize; 2]>,
    forest_edges: Vec<[usize; 2]>,
}

pub fn prune(common: &Common, metric: &Path, heldout: &Path) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    config.copula.validate()?;
    if let Some(h) = config.entropy_bandwidth {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid_config(format!("entropy_bandwidth must be positive, got {h}")));
        }
    }
    let m = read_metric(common, metric)?;
    let heldout = read_dataset(common, heldout)?.to_continuous()?;
    same_dim("held-out dataset", m.dim(), heldout.dim())?;
    let trace = run_greedy(&m);
    let result = density::prune_with_heldout(&trace, &heldout, &config.prune_config())?;
    let forest = trace.mst_prefix(result.k_hat);
    let pruned = match config.learner {
        Learner::Mtg => result.pruned_graph.clone(),
        Learner::Mst => forest.clone(),
    };
    let record = PruneRecord {
        learner: config.learner,
        trace_len: trace.len(),
        k_hat: result.k_hat,
        argmax_set: result.argmax_set,
        objective_per_k: result.objective_per_k,
        pruned_edges: edge_pairs(&pruned),
        forest_edges: edge_pairs(&forest),
    };
    let mut out = Staged::new(&common.out);
    out.add("pruned.edges", formats::write_edges(&pruned));
    out.add("forest.edges", formats::write_edges(&forest));
    out.add("prune.json", json_pretty(&record)?);
    out.commit()
}

#[derive(Debug, Serialize)]
struct DensityRecord {
    d: usize,
    forest_edges: Vec<[usize; 2]>,
    h1: f64,
    h2: f64,
    ll_kite: f64,
    ll_fde: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ll_gauss: Option<f64>,
}

fn continuous(dataset: Dataset, what: &str) -> Result<ContinuousDataset, Failure> {
    match dataset {
        Dataset::Continuous(c) => Ok(c),
        Dataset::Discrete(_) => Err(Failure::new(Kind::InvalidInput, format!("{what} must be continuous"))),
    }
}

pub fn density(common: &Common, train: &Path, heldout: &Path, forest: &Path, precision: Option<&Path>) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    config.density.validate()?;
    let train = continuous(read_dataset(common, train)?, "training dataset")?;
    let heldout = continuous(read_dataset(common, heldout)?, "held-out dataset")?;
    same_dim("held-out dataset", train.dim(), heldout.dim())?;
    let forest = read_edges(common, forest, train.dim())?;
    let gauss = precision.map(|p| read_precision(common, p, train.dim())).transpose()?;
    let fitted = density::fit_forest_density(&train, &forest, &config.density)?;
    let (h1, h2) = fitted.bandwidths();
    let record = DensityRecord {
        d: train.dim(),
        forest_edges: edge_pairs(&forest),
        h1,
        h2,
        ll_kite: density::heldout_ll(&fitted, &heldout, HeldoutMode::Kite)?,
        ll_fde: density::heldout_ll(&fitted, &heldout, HeldoutMode::Fde)?,
        ll_gauss: gauss
            .map(|g| density::heldout_ll_gauss(&g.mu, &g.omega, &heldout))
            .transpose()?,
    };
    let mut out = Staged::new(&common.out);
    out.add("density.json", json_pretty(&record)?);
    out.commit()
}

fn summary_csv(s: &pipeline::Summary) -> String {
    let mut out = String::from("statistic,value\n");
    let rows: [(&str, f64); 9] = [
        ("replications", s.replications as f64),
        ("mean_precision", s.mean_precision),
        ("mean_recall", s.mean_recall),
        ("mean_f1", s.mean_f1),
        ("exact_rate", s.exact_rate),
        ("mean_k_hat", s.mean_k_hat),
        ("mean_pruned_edges", s.mean_pruned_edges),
        ("mean_ll_kite", s.mean_ll_kite),
        ("mean_ll_fde", s.mean_ll_fde),
    ];
    for (name, v) in rows {
        writeln!(out, "{name},{v}").expect("writing to a String cannot fail");
    }
    if let Some(v) = s.mean_ll_gauss {
        writeln!(out, "mean_ll_gauss,{v}").expect("writing to a String cannot fail");
    }
    out
}

fn curve_csv(s: &pipeline::Summary) -> String {
    let mut out = String::from("k,mean_objective\n");
    for (k, v) in s.mean_objective_per_k.iter().enumerate() {
        writeln!(out, "{k},{v}").expect("writing to a String cannot fail");
    }
    out
}

pub fn bench(common: &Common, precision: Option<&Path>) -> Result<(), Failure> {
    let config = experiment_config(common)?;
    config.validate()?;
    let external = precision.map(|p| read_precision(common, p, config.pattern.dim())).transpose()?;
    let records = pipeline::run_experiment(&config, external.as_ref())?;
    let mut lines = String::new();
    for r in &records {
        lines.push_str(&json_line(r)?);
    }
    let summary = pipeline::summarize(&records);
    let mut out = Staged::new(&common.out);
    out.add("config.json", json_pretty(&config)?);
    out.add("records.jsonl", lines);
    out.add("summary.csv", summary_csv(&summary));
    out.add("curve.csv", curve_csv(&summary));
    out.commit()
}


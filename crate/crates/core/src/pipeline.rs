//! End-to-end synthetic experiment: generate, split, estimate the metric,
//! learn, prune on held-out data, fit the forest density, and score.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{self, CopulaConfig};
use crate::data::{seeded_rng, ContinuousDataset};
use crate::density::{self, DensityConfig, HeldoutMode, PruneConfig};
use crate::error::{Error, Result};
use crate::graph::{recovery_metrics, run_greedy, Graph, MetricMatrix, RecoveryMetrics};
use crate::synth::{self, GaussianModel, GraphPattern, DEFAULT_BOX_COX_NU, PRECISION_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distortion {
    None,
    BoxCox,
    Nonparanormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMethod {
    Discrete,
    CopulaMi,
    PluginMi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Mst,
    Mtg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub pattern: GraphPattern,
    pub n_train: usize,
    pub n_heldout: usize,
    pub distortion: Distortion,
    pub box_cox_nu: f64,
    /// Off-diagonal precision draws are uniform on `[lo, hi)`.
    pub precision_range: (f64, f64),
    pub method: MetricMethod,
    pub learner: Learner,
    pub copula: CopulaConfig,
    /// Plug-in MI bandwidth; `n^(-1/4)` when unset.
    pub plugin_bandwidth: Option<f64>,
    pub density: DensityConfig,
    /// Held-out entropy bandwidth on the rank scale; `n^(-1/4)` when unset.
    pub entropy_bandwidth: Option<f64>,
    pub replications: usize,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            seed: 0,
            pattern: GraphPattern::Hub {
                stars: 10,
                star_size: 10,
            },
            n_train: 100,
            n_heldout: 100,
            distortion: Distortion::None,
            box_cox_nu: DEFAULT_BOX_COX_NU,
            precision_range: PRECISION_RANGE,
            method: MetricMethod::CopulaMi,
            learner: Learner::Mtg,
            copula: CopulaConfig::default(),
            plugin_bandwidth: None,
            density: DensityConfig::default(),
            entropy_bandwidth: None,
            replications: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.pattern.validate()?;
        if self.n_train < 2 || self.n_heldout < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_train and n_heldout must be at least 2, got {} and {}",
                self.n_train, self.n_heldout
            )));
        }
        if !(self.box_cox_nu > 0.0) || !self.box_cox_nu.is_finite() {
            return Err(Error::InvalidParameter(format!("box_cox_nu must be positive, got {}", self.box_cox_nu)));
        }
        let (lo, hi) = self.precision_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("precision_range must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        if self.method == MetricMethod::Discrete {
            return Err(Error::InvalidParameter(
                "the synthetic Gaussian pipeline needs a continuous metric (copula-mi or plugin-mi)".into(),
            ));
        }
        if let Some(h) = self.plugin_bandwidth {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::InvalidParameter(format!("plugin_bandwidth must lie in (0, 1], got {h}")));
            }
        }
        if let Some(h) = self.entropy_bandwidth {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter(format!("entropy_bandwidth must be positive, got {h}")));
            }
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        self.copula.validate()?;
        self.density.validate()
    }

    pub fn replication_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn prune_config(&self) -> PruneConfig {
        PruneConfig {
            copula: self.copula,
            entropy_bandwidth: self.entropy_bandwidth,
        }
    }
}

/// One generated replication before any estimation.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub truth: Graph,
    pub model: GaussianModel,
    pub train: ContinuousDataset,
    pub heldout: ContinuousDataset,
}

/// Truth graph, precision matrix and the distorted train/held-out split for replication `index`.
pub fn generate(config: &ExperimentConfig, index: usize) -> Result<GeneratedData> {
    config.validate()?;
    let mut rng = seeded_rng(config.replication_seed(index));
    let (graph_seed, precision_seed, sample_seed) = (rng.next_u64(), rng.next_u64(), rng.next_u64());
    let truth = synth::make_pattern_graph(&config.pattern, graph_seed)?;
    let model = synth::make_precision_in(&truth, precision_seed, config.precision_range)?;
    let n = config.n_train + config.n_heldout;
    let raw = synth::sample_gaussian(&model, n, sample_seed)?;
    let data = match config.distortion {
        Distortion::None => raw,
        Distortion::BoxCox => synth::box_cox(&raw, config.box_cox_nu)?,
        Distortion::Nonparanormal => synth::nonparanormal(&raw, &model)?,
    };
    Ok(GeneratedData {
        truth,
        model,
        train: data.slice_rows(0, config.n_train),
        heldout: data.slice_rows(config.n_train, n),
    })
}

/// Continuous metric matrix for the configured method.
pub fn estimate_metric(data: &ContinuousDataset, config: &ExperimentConfig) -> Result<MetricMatrix> {
    match config.method {
        MetricMethod::CopulaMi => copula::mi_matrix_copula(data, &config.copula),
        MetricMethod::PluginMi => copula::mi_matrix_plugin(data, config.plugin_bandwidth, &config.copula),
        MetricMethod::Discrete => Err(Error::InvalidParameter("discrete metric needs a discrete dataset".into())),
    }
}

/// `(mu, Omega)` scored on the held-out split with the Gaussian log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScoreInput {
    pub mu: Vec<f64>,
    pub omega: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub config: ExperimentConfig,
    pub replication: usize,
    pub seed: u64,
    pub d: usize,
    pub truth_edges: usize,
    pub truth_triangle_free: bool,
    pub trace_len: usize,
    pub k_hat: usize,
    pub pruned_edges: usize,
    /// Pruned learner output against the truth.
    pub recovery: RecoveryMetrics,
    /// Full learner output against the truth.
    pub recovery_unpruned: RecoveryMetrics,
    pub ll_kite: f64,
    pub ll_fde: f64,
    pub ll_gauss: Option<f64>,
    pub objective_per_k: Vec<f64>,
    pub elapsed_ms: f64,
}

/// Runs replication `index`. The Gaussian score uses `external` when given,
/// otherwise the true model when the data are undistorted.
pub fn run_replication(config: &ExperimentConfig, index: usize, external: Option<&GaussianScoreInput>) -> Result<ReplicationRecord> {
    let started = Instant::now();
    let gen = generate(config, index)?;
    let metric = estimate_metric(&gen.train, config)?;
    let trace = run_greedy(&metric);
    let pruned = density::prune_with_heldout(&trace, &gen.heldout, &config.prune_config())?;
    let (estimate, unpruned) = match config.learner {
        Learner::Mtg => (pruned.pruned_graph.clone(), trace.mtg_graph()),
        Learner::Mst => (trace.mst_prefix(pruned.k_hat), trace.mst_graph()),
    };
    let forest = trace.mst_prefix(pruned.k_hat);
    let fitted = density::fit_forest_density(&gen.train, &forest, &config.density)?;
    let ll_kite = density::heldout_ll(&fitted, &gen.heldout, HeldoutMode::Kite)?;
    let ll_fde = density::heldout_ll(&fitted, &gen.heldout, HeldoutMode::Fde)?;
    let ll_gauss = match (external, config.distortion) {
        (Some(g), _) => Some(density::heldout_ll_gauss(&g.mu, &g.omega, &gen.heldout)?),
        (None, Distortion::None) => Some(density::heldout_ll_gauss(&gen.model.mu, &gen.model.omega, &gen.heldout)?),
        (None, _) => None,
    };
    Ok(ReplicationRecord {
        config: config.clone(),
        replication: index,
        seed: config.replication_seed(index),
        d: gen.truth.dim(),
        truth_edges: gen.truth.edge_count(),
        truth_triangle_free: gen.truth.is_triangle_free(),
        trace_len: trace.len(),
        k_hat: pruned.k_hat,
        pruned_edges: estimate.edge_count(),
        recovery: recovery_metrics(&estimate, &gen.truth),
        recovery_unpruned: recovery_metrics(&unpruned, &gen.truth),
        ll_kite,
        ll_fde,
        ll_gauss,
        objective_per_k: pruned.objective_per_k,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// All replications, in replication order.
pub fn run_experiment(config: &ExperimentConfig, external: Option<&GaussianScoreInput>) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    (0..config.replications)
        .into_par_iter()
        .map(|i| {
            run_replication(config, i, external).map_err(|e| Error::Replication {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Replication means. Pruning curves of unequal length are averaged over the
/// replications that reach each `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replications: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub exact_rate: f64,
    pub mean_k_hat: f64,
    pub mean_pruned_edges: f64,
    pub mean_ll_kite: f64,
    pub mean_ll_fde: f64,
    pub mean_ll_gauss: Option<f64>,
    pub mean_objective_per_k: Vec<f64>,
}

pub fn summarize(records: &[ReplicationRecord]) -> Summary {
    let r = records.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ReplicationRecord) -> f64| records.iter().map(f).sum::<f64>() / r;
    let gauss: Vec<f64> = records.iter().filter_map(|x| x.ll_gauss).collect();
    let longest = records.iter().map(|x| x.objective_per_k.len()).max().unwrap_or(0);
    let mean_objective_per_k = (0..longest)
        .map(|k| {
            let vals: Vec<f64> = records.iter().filter_map(|x| x.objective_per_k.get(k).copied()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect();
    Summary {
        replications: records.len(),
        mean_precision: mean(&|x| x.recovery.precision),
        mean_recall: mean(&|x| x.recovery.recall),
        mean_f1: mean(&|x| x.recovery.f1),
        exact_rate: mean(&|x| f64::from(u8::from(x.recovery.exact))),
        mean_k_hat: mean(&|x| x.k_hat as f64),
        mean_pruned_edges: mean(&|x| x.pruned_edges as f64),
        mean_ll_kite: mean(&|x| x.ll_kite),
        mean_ll_fde: mean(&|x| x.ll_fde),
        mean_ll_gauss: (gauss.len() == records.len() && !gauss.is_empty())
            .then(|| gauss.iter().sum::<f64>() / gauss.len() as f64),
        mean_objective_per_k,
    }
}

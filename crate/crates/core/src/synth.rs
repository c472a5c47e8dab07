//! Synthetic ground truths: graph patterns, sparse Gaussian precision matrices,
//! sampling, and monotone marginal distortions.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{seeded_rng, ContinuousDataset};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Off-diagonal precision entries are drawn uniformly from this range.
pub const PRECISION_RANGE: (f64, f64) = (-30.0, 10.0);
pub const DEFAULT_MEAN: f64 = 0.5;
pub const DEFAULT_BOX_COX_NU: f64 = 2.5;

fn default_cycle_len() -> usize {
    4
}

fn default_cluster_p() -> f64 {
    0.2
}

/// Ground-truth graph families. Components occupy consecutive vertex blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphPattern {
    /// Stars; the first vertex of each block is the hub.
    Hub { stars: usize, star_size: usize },
    /// Connected components with exactly one cycle of length at least `min_cycle_len`.
    Constellation {
        components: usize,
        component_size: usize,
        #[serde(default = "default_cycle_len")]
        min_cycle_len: usize,
    },
    /// `i ~ j` iff `|i - j| <= 2` within a block.
    Band { bands: usize, band_size: usize },
    /// Erdős–Rényi blocks.
    Cluster {
        clusters: usize,
        cluster_size: usize,
        #[serde(default = "default_cluster_p")]
        p: f64,
    },
    Chain { d: usize },
    Cycle { d: usize },
    /// No edges.
    Independent { d: usize },
}

impl GraphPattern {
    pub fn dim(&self) -> usize {
        match *self {
            GraphPattern::Hub { stars, star_size } => stars * star_size,
            GraphPattern::Constellation {
                components,
                component_size,
                ..
            } => components * component_size,
            GraphPattern::Band { bands, band_size } => bands * band_size,
            GraphPattern::Cluster {
                clusters, cluster_size, ..
            } => clusters * cluster_size,
            GraphPattern::Chain { d } | GraphPattern::Cycle { d } | GraphPattern::Independent { d } => d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            GraphPattern::Hub { stars, star_size } if stars == 0 || star_size == 0 => {
                bad("hub pattern needs at least one star of size >= 1".into())
            }
            GraphPattern::Constellation {
                components,
                component_size,
                min_cycle_len,
            } if components == 0 || min_cycle_len < 4 || component_size < min_cycle_len => bad(format!(
                "constellation needs components >= 1 and 4 <= min_cycle_len <= component_size, got {components}, {min_cycle_len}, {component_size}"
            )),
            GraphPattern::Band { bands, band_size } if bands == 0 || band_size == 0 => {
                bad("band pattern needs at least one band of size >= 1".into())
            }
            GraphPattern::Cluster {
                clusters,
                cluster_size,
                p,
            } if clusters == 0 || cluster_size == 0 || !(0.0..=1.0).contains(&p) => {
                bad(format!("cluster pattern needs nonempty clusters and p in [0, 1], got p={p}"))
            }
            GraphPattern::Chain { d } | GraphPattern::Independent { d } if d == 0 => bad("dimension must be positive".into()),
            GraphPattern::Cycle { d } if d < 3 => bad(format!("a cycle needs at least 3 vertices, got {d}")),
            _ => Ok(()),
        }
    }
}

/// Deterministic given `(pattern, seed)`.
pub fn make_pattern_graph(pattern: &GraphPattern, seed: u64) -> Result<Graph> {
    pattern.validate()?;
    let mut rng = seeded_rng(seed);
    let mut g = Graph::empty(pattern.dim());
    let mut add = |a: usize, b: usize| {
        g.insert(a, b).expect("generated edges are in range");
    };
    match *pattern {
        GraphPattern::Hub { stars, star_size } => {
            for s in 0..stars {
                let base = s * star_size;
                for leaf in 1..star_size {
                    add(base, base + leaf);
                }
            }
        }
        GraphPattern::Constellation {
            components,
            component_size,
            min_cycle_len,
        } => {
            for c in 0..components {
                let mut nodes: Vec<usize> = (c * component_size..(c + 1) * component_size).collect();
                nodes.shuffle(&mut rng);
                let len = rng.random_range(min_cycle_len..=component_size);
                for k in 0..len {
                    add(nodes[k], nodes[(k + 1) % len]);
                }
                for k in len..component_size {
                    let anchor = nodes[rng.random_range(0..k)];
                    add(anchor, nodes[k]);
                }
            }
        }
        GraphPattern::Band { bands, band_size } => {
            for b in 0..bands {
                let base = b * band_size;
                for i in 0..band_size {
                    for j in (i + 1)..band_size.min(i + 3) {
                        add(base + i, base + j);
                    }
                }
            }
        }
        GraphPattern::Cluster {
            clusters,
            cluster_size,
            p,
        } => {
            for c in 0..clusters {
                let base = c * cluster_size;
                for i in 0..cluster_size {
                    for j in (i + 1)..cluster_size {
                        if rng.random::<f64>() < p {
                            add(base + i, base + j);
                        }
                    }
                }
            }
        }
        GraphPattern::Chain { d } => {
            for i in 1..d {
                add(i - 1, i);
            }
        }
        GraphPattern::Cycle { d } => {
            for i in 0..d {
                add(i, (i + 1) % d);
            }
        }
        GraphPattern::Independent { .. } => {}
    }
    Ok(g)
}

/// Multivariate normal with a known precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub mu: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    /// Off-diagonal support of `omega`.
    pub graph: Graph,
}

impl GaussianModel {
    /// Builds the model from a symmetric positive definite precision matrix.
    pub fn from_precision(mu: Vec<f64>, omega: DMatrix<f64>) -> Result<GaussianModel> {
        let d = mu.len();
        if omega.nrows() != d || omega.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: omega.nrows(),
            });
        }
        let mut graph = Graph::empty(d);
        for i in 0..d {
            for j in (i + 1)..d {
                if omega[(i, j)] != omega[(j, i)] {
                    return Err(Error::Asymmetric { i, j });
                }
                if omega[(i, j)] != 0.0 {
                    graph.insert(i, j)?;
                }
            }
        }
        let sigma = Cholesky::new(omega.clone()).ok_or(Error::NotPositiveDefinite)?.inverse();
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        Ok(GaussianModel { mu, sigma, omega, graph })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Precision matrix supported on `graph`: uniform off-diagonal draws, a
/// diagonal shift of `|lambda_min| + 1`, then division by `lambda_max` so the
/// covariance has smallest eigenvalue 1. Mean is `0.5` in every coordinate.
pub fn make_precision(graph: &Graph, seed: u64) -> Result<GaussianModel> {
    make_precision_in(graph, seed, PRECISION_RANGE)
}

/// [`make_precision`] with off-diagonal draws from `U[lo, hi)`.
pub fn make_precision_in(graph: &Graph, seed: u64, (lo, hi): (f64, f64)) -> Result<GaussianModel> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!("precision range must satisfy lo < hi, got [{lo}, {hi}]")));
    }
    let d = graph.dim();
    let mut rng = seeded_rng(seed);
    let mut omega = DMatrix::zeros(d, d);
    for e in graph.edges() {
        let w = rng.random_range(lo..hi);
        omega[(e.i, e.j)] = w;
        omega[(e.j, e.i)] = w;
    }
    let eig = SymmetricEigen::new(omega.clone()).eigenvalues;
    let shift = eig.min().abs() + 1.0;
    for i in 0..d {
        omega[(i, i)] = shift;
    }
    let top = SymmetricEigen::new(omega.clone()).eigenvalues.max();
    omega /= top;
    GaussianModel::from_precision(vec![DEFAULT_MEAN; d], omega)
}

/// `n` draws `mu + L z` with `sigma = L L'`.
pub fn sample_gaussian(model: &GaussianModel, n: usize, seed: u64) -> Result<ContinuousDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let d = model.dim();
    let l = Cholesky::new(model.sigma.clone()).ok_or(Error::NotPositiveDefinite)?.unpack();
    let mut rng = seeded_rng(seed);
    let mut cells = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        for i in 0..d {
            let dot: f64 = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
            cells.push(model.mu[i] + dot);
        }
    }
    ContinuousDataset::new(n, d, cells)
}

/// `(sign(x) |x|^nu - 1) / nu` elementwise.
pub fn box_cox(data: &ContinuousDataset, nu: f64) -> Result<ContinuousDataset> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("Box-Cox exponent must be positive, got {nu}")));
    }
    data.map(|_, x| (x.signum() * x.abs().powf(nu) - 1.0) / nu)
}

/// `Phi((x - mu_i) / sqrt(sigma_ii))` elementwise, with the model's true marginals.
pub fn nonparanormal(data: &ContinuousDataset, model: &GaussianModel) -> Result<ContinuousDataset> {
    if data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let phi = Normal::standard();
    let sd: Vec<f64> = (0..model.dim()).map(|i| model.sigma[(i, i)].sqrt()).collect();
    data.map(|c, x| phi.cdf((x - model.mu[c]) / sd[c]))
}

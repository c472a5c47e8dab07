//! Forest-factorized kernel density estimation, held-out scoring and pruning.
//!
//! Given a forest `F` with isolated vertex set `S`, the fitted density is
//!
//! ```text
//! p(x) = prod_{(j,k) in F} p2(x_j, x_k) / (p2(x_j) p2(x_k))
//!        * prod_{u in S} p1(x_u) * prod_{l not in S} p2(x_l)
//! ```
//!
//! where `p1` uses bandwidth `c1 n^(-1/5)` and `p2` uses `c2 n^(-1/6)`, both
//! multiplied by the column's interquartile range.

use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{self, CopulaConfig, Kernel, LOG_FLOOR};
use crate::data::ContinuousDataset;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, GreedyTrace, MetricMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub c1: f64,
    pub c2: f64,
    pub kernel: Kernel,
}

impl Default for DensityConfig {
    fn default() -> DensityConfig {
        DensityConfig {
            c1: 1.0,
            c2: 1.0,
            kernel: Kernel::Epanechnikov,
        }
    }
}

impl DensityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bandwidth scales must be positive, got c1={}, c2={}",
                self.c1, self.c2
            )))
        }
    }
}

/// Interquartile range, falling back to the standard deviation for heavily tied columns.
fn column_scale(x: &[f64], col: usize) -> Result<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 || s[0] == s[n - 1] {
        return Err(Error::ConstantColumn(col));
    }
    let quantile = |q: f64| {
        let pos = q * (n - 1) as f64;
        let (lo, frac) = (pos.floor() as usize, pos.fract());
        s[lo] + frac * (s[(lo + 1).min(n - 1)] - s[lo])
    };
    let iqr = quantile(0.75) - quantile(0.25);
    if iqr > 0.0 {
        return Ok(iqr);
    }
    let mean = s.iter().sum::<f64>() / n as f64;
    Ok((s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt())
}

/// Univariate KDE over sorted training values.
#[derive(Debug, Clone)]
struct Kde1 {
    sorted: Vec<f64>,
    bw: f64,
}

impl Kde1 {
    fn new(x: &[f64], bw: f64) -> Kde1 {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        Kde1 { sorted, bw }
    }

    fn eval(&self, x: f64, kernel: Kernel) -> f64 {
        let lo = self.sorted.partition_point(|&v| v < x - self.bw);
        let hi = self.sorted.partition_point(|&v| v <= x + self.bw);
        let total: f64 = self.sorted[lo..hi].iter().map(|&v| kernel.eval((x - v) / self.bw)).sum();
        total / (self.sorted.len() as f64 * self.bw)
    }
}

/// Product-kernel bivariate KDE, samples sorted by the first coordinate.
#[derive(Debug, Clone)]
struct Kde2 {
    points: Vec<(f64, f64)>,
    bw: (f64, f64),
}

impl Kde2 {
    fn new(x: &[f64], y: &[f64], bw: (f64, f64)) -> Kde2 {
        let mut points: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Kde2 { points, bw }
    }

    fn eval(&self, x: f64, y: f64, kernel: Kernel) -> f64 {
        let (bx, by) = self.bw;
        let lo = self.points.partition_point(|p| p.0 < x - bx);
        let hi = self.points.partition_point(|p| p.0 <= x + bx);
        let total: f64 = self.points[lo..hi]
            .iter()
            .map(|&(px, py)| kernel.eval((x - px) / bx) * kernel.eval((y - py) / by))
            .sum();
        total / (self.points.len() as f64 * bx * by)
    }
}

fn floored_ln(p: f64) -> f64 {
    p.max(LOG_FLOOR).ln()
}

/// Which vertices enter the held-out product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeldoutMode {
    /// All vertices; isolated ones at the narrower `h1` bandwidth.
    Kite,
    /// Non-isolated vertices only.
    Fde,
}

impl FromStr for HeldoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<HeldoutMode> {
        match s {
            "kite" => Ok(HeldoutMode::Kite),
            "fde" => Ok(HeldoutMode::Fde),
            other => Err(Error::InvalidParameter(format!("unknown held-out mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FittedForestDensity {
    forest: Graph,
    isolated: Vec<usize>,
    h1: f64,
    h2: f64,
    kernel: Kernel,
    /// Per vertex: `h1` KDE for isolated vertices, `h2` KDE otherwise.
    univariate: Vec<Kde1>,
    bivariate: Vec<(Edge, Kde2)>,
}

pub fn fit_forest_density(train: &ContinuousDataset, forest: &Graph, config: &DensityConfig) -> Result<FittedForestDensity> {
    config.validate()?;
    let d = train.dim();
    if forest.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: forest.dim(),
        });
    }
    if !forest.is_acyclic() {
        return Err(Error::Cyclic);
    }
    let n = train.n();
    if n < 2 {
        return Err(Error::InvalidData("density fitting needs at least two samples".into()));
    }
    let nf = n as f64;
    let h1 = config.c1 * nf.powf(-0.2);
    let h2 = config.c2 * nf.powf(-1.0 / 6.0);
    let columns = train.columns();
    let scales = columns.iter().enumerate().map(|(c, x)| column_scale(x, c)).collect::<Result<Vec<_>>>()?;
    let degrees = forest.degrees();
    let univariate = columns
        .iter()
        .zip(&scales)
        .zip(&degrees)
        .map(|((x, &s), &deg)| Kde1::new(x, if deg == 0 { h1 } else { h2 } * s))
        .collect();
    let bivariate = forest
        .edges()
        .map(|e| (e, Kde2::new(&columns[e.i], &columns[e.j], (h2 * scales[e.i], h2 * scales[e.j]))))
        .collect();
    Ok(FittedForestDensity {
        forest: forest.clone(),
        isolated: forest.isolated_vertices(),
        h1,
        h2,
        kernel: config.kernel,
        univariate,
        bivariate,
    })
}

impl FittedForestDensity {
    pub fn forest(&self) -> &Graph {
        &self.forest
    }

    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// Bandwidths before per-column scaling.
    pub fn bandwidths(&self) -> (f64, f64) {
        (self.h1, self.h2)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn log_density_mode(&self, x: &[f64], mode: HeldoutMode) -> f64 {
        let k = self.kernel;
        let mut total = 0.0;
        for (e, kde) in &self.bivariate {
            let (a, b) = (x[e.i], x[e.j]);
            total += floored_ln(kde.eval(a, b, k))
                - floored_ln(self.univariate[e.i].eval(a, k))
                - floored_ln(self.univariate[e.j].eval(b, k));
        }
        let degrees = self.forest.degrees();
        for (v, kde) in self.univariate.iter().enumerate() {
            if mode == HeldoutMode::Kite || degrees[v] > 0 {
                total += floored_ln(kde.eval(x[v], k));
            }
        }
        total
    }

    /// Log of the fitted density at `x`, every KDE value floored at `1e-12`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.forest.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.forest.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("evaluation point must be finite".into()));
        }
        Ok(self.log_density_mode(x, HeldoutMode::Kite))
    }
}

/// Mean held-out log-likelihood.
pub fn heldout_ll(fd: &FittedForestDensity, heldout: &ContinuousDataset, mode: HeldoutMode) -> Result<f64> {
    if heldout.dim() != fd.forest.dim() {
        return Err(Error::DimensionMismatch {
            expected: fd.forest.dim(),
            got: heldout.dim(),
        });
    }
    if heldout.n() == 0 {
        return Err(Error::InvalidData("held-out set is empty".into()));
    }
    let rows: Vec<&[f64]> = heldout.rows().collect();
    let values: Vec<f64> = rows.par_iter().map(|x| fd.log_density_mode(x, mode)).collect();
    Ok(values.iter().sum::<f64>() / heldout.n() as f64)
}

/// Mean Gaussian log-density `-1/2 (x-mu)' Omega (x-mu) + 1/2 log(det Omega / (2 pi)^d)`.
pub fn heldout_ll_gauss(mu: &[f64], omega: &DMatrix<f64>, heldout: &ContinuousDataset) -> Result<f64> {
    let d = mu.len();
    if omega.nrows() != d || omega.ncols() != d || heldout.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if omega.nrows() != d { omega.nrows() } else { heldout.dim() },
        });
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if (omega[(i, j)] - omega[(j, i)]).abs() > 1e-12 * (1.0 + omega[(i, j)].abs()) {
                return Err(Error::Asymmetric { i, j });
            }
        }
    }
    let chol = Cholesky::new(omega.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let constant = 0.5 * (log_det - d as f64 * (2.0 * std::f64::consts::PI).ln());
    let lt = l.transpose();
    let mut total = 0.0;
    for x in heldout.rows() {
        let r = DVector::from_iterator(d, x.iter().zip(mu).map(|(a, b)| a - b));
        total += -0.5 * (&lt * r).norm_squared() + constant;
    }
    Ok(total / heldout.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneResult {
    /// Objective after `k` stream steps, `k = 0..=K`.
    pub objective_per_k: Vec<f64>,
    pub argmax_set: Vec<usize>,
    pub k_hat: usize,
    pub pruned_graph: Graph,
}

/// Picks the stream prefix maximizing held-out `sum MI(edges) - sum H(non-isolated vertices)`
/// over the spanning-forest prefixes, then returns the MTG prefix at the
/// largest maximizer.
pub fn prune(trace: &GreedyTrace, heldout_mi: &MetricMatrix, heldout_entropy: &[f64]) -> Result<PruneResult> {
    let d = trace.dim();
    if heldout_mi.dim() != d || heldout_entropy.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if heldout_mi.dim() != d { heldout_mi.dim() } else { heldout_entropy.len() },
        });
    }
    let mut touched = vec![false; d];
    let mut current = 0.0;
    let mut objective_per_k = Vec::with_capacity(trace.len() + 1);
    objective_per_k.push(current);
    for rec in trace.records() {
        if rec.accepted_by_mst {
            current += heldout_mi.edge_value(rec.edge);
            for v in [rec.edge.i, rec.edge.j] {
                if !touched[v] {
                    touched[v] = true;
                    current -= heldout_entropy[v];
                }
            }
        }
        objective_per_k.push(current);
    }
    let best = objective_per_k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax_set: Vec<usize> = (0..objective_per_k.len()).filter(|&k| objective_per_k[k] == best).collect();
    let k_hat = *argmax_set.last().expect("objective has at least the k = 0 entry");
    Ok(PruneResult {
        objective_per_k,
        argmax_set,
        k_hat,
        pruned_graph: trace.mtg_prefix(k_hat),
    })
}

/// Held-out quantities for pruning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub copula: CopulaConfig,
    /// Entropy bandwidth on the rank scale; `n^(-1/4)` when unset.
    pub entropy_bandwidth: Option<f64>,
}

/// Copula mutual information of every pair and the marginal entropy of every
/// column, both computed on the rank scale of `heldout`.
pub fn heldout_statistics(heldout: &ContinuousDataset, config: &PruneConfig) -> Result<(MetricMatrix, Vec<f64>)> {
    let mi = copula::mi_estimates_copula(heldout, &config.copula)?;
    let h = config
        .entropy_bandwidth
        .unwrap_or_else(|| copula::plugin_bandwidth(heldout.n()));
    let ranks = copula::ranks(heldout);
    let entropy = (0..heldout.dim())
        .into_par_iter()
        .map(|c| copula::marginal_entropy(ranks.column(c), h, config.copula.kernel).map_err(|_| Error::ConstantColumn(c)))
        .collect::<Result<Vec<_>>>()?;
    Ok((mi, entropy))
}

/// [`prune`] with held-out statistics estimated from `heldout`.
pub fn prune_with_heldout(trace: &GreedyTrace, heldout: &ContinuousDataset, config: &PruneConfig) -> Result<PruneResult> {
    let (mi, entropy) = heldout_statistics(heldout, config)?;
    prune(trace, &mi, &entropy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::run_greedy;

    fn toy(n: usize, d: usize) -> ContinuousDataset {
        let cells = (0..n * d).map(|k| ((k * 7919) % 1009) as f64 / 100.0 + (k % d) as f64).collect();
        ContinuousDataset::new(n, d, cells).unwrap()
    }

    #[test]
    fn empty_forest_is_product_of_h1_marginals() {
        let train = toy(60, 3);
        let fd = fit_forest_density(&train, &Graph::empty(3), &DensityConfig::default()).unwrap();
        assert_eq!(fd.isolated(), &[0, 1, 2]);
        let x = train.row(5);
        let want: f64 = (0..3).map(|v| floored_ln(fd.univariate[v].eval(x[v], Kernel::Epanechnikov))).sum();
        assert_eq!(fd.log_density(x).unwrap(), want);
        let h1 = 60f64.powf(-0.2);
        let iqr = column_scale(&train.column(0), 0).unwrap();
        assert!((fd.univariate[0].bw - h1 * iqr).abs() < 1e-15);
    }

    #[test]
    fn single_edge_reduces_to_bivariate() {
        let train = toy(80, 2);
        let forest = Graph::from_edges(2, [(0, 1)]).unwrap();
        let fd = fit_forest_density(&train, &forest, &DensityConfig::default()).unwrap();
        let x = train.row(3);
        let biv = fd.bivariate[0].1.eval(x[0], x[1], Kernel::Epanechnikov);
        assert!((fd.log_density(x).unwrap() - biv.ln()).abs() < 1e-12);
    }

    #[test]
    fn far_point_hits_every_floor() {
        let train = toy(50, 3);
        let forest = Graph::from_edges(3, [(0, 1)]).unwrap();
        let fd = fit_forest_density(&train, &forest, &DensityConfig::default()).unwrap();
        let far = [1e6, 1e6, 1e6];
        // Each edge trades two floored marginals for one floored bivariate.
        assert!((fd.log_density(&far).unwrap() - 2.0 * LOG_FLOOR.ln()).abs() < 1e-9);
        let empty = fit_forest_density(&train, &Graph::empty(3), &DensityConfig::default()).unwrap();
        assert!((empty.log_density(&far).unwrap() - 3.0 * LOG_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn fde_of_empty_forest_is_zero_and_equals_kite_without_isolated() {
        let train = toy(40, 3);
        let held = toy(15, 3);
        let empty = fit_forest_density(&train, &Graph::empty(3), &DensityConfig::default()).unwrap();
        assert_eq!(heldout_ll(&empty, &held, HeldoutMode::Fde).unwrap(), 0.0);
        let tree = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let fd = fit_forest_density(&train, &tree, &DensityConfig::default()).unwrap();
        assert_eq!(
            heldout_ll(&fd, &held, HeldoutMode::Kite).unwrap(),
            heldout_ll(&fd, &held, HeldoutMode::Fde).unwrap()
        );
    }

    #[test]
    fn fit_rejects_cycles_and_constant_columns() {
        let train = toy(30, 3);
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(fit_forest_density(&train, &tri, &DensityConfig::default()).unwrap_err(), Error::Cyclic);
        let flat = ContinuousDataset::new(3, 1, vec![2.0; 3]).unwrap();
        assert_eq!(
            fit_forest_density(&flat, &Graph::empty(1), &DensityConfig::default()).unwrap_err(),
            Error::ConstantColumn(0)
        );
    }

    #[test]
    fn gauss_standard_normal_at_mode() {
        let held = ContinuousDataset::new(1, 1, vec![0.0]).unwrap();
        let ll = heldout_ll_gauss(&[0.0], &DMatrix::identity(1, 1), &held).unwrap();
        assert!((ll + 0.918_938_533_204_672_7).abs() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let held2 = ContinuousDataset::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert_eq!(heldout_ll_gauss(&[0.0, 0.0], &bad, &held2), Err(Error::NotPositiveDefinite));
    }

    fn chain_trace() -> GreedyTrace {
        // Stream: (0,1), (1,2), (0,2) rejected by the forest, (2,3).
        let mut m = MetricMatrix::infinite(4);
        m.set(0, 1, -3.0);
        m.set(1, 2, -2.0);
        m.set(0, 2, -1.5);
        m.set(2, 3, -1.0);
        run_greedy(&m)
    }

    #[test]
    fn zero_information_prunes_everything() {
        let trace = chain_trace();
        let mi = MetricMatrix::from_fn(4, |_, _| 0.0);
        let r = prune(&trace, &mi, &[0.2; 4]).unwrap();
        assert_eq!(r.k_hat, 0);
        assert_eq!(r.pruned_graph.edge_count(), 0);
    }

    #[test]
    fn ties_resolve_to_the_largest_prefix() {
        let trace = chain_trace();
        let mut mi = MetricMatrix::from_fn(4, |_, _| 0.0);
        mi.set(0, 1, 1.0);
        mi.set(1, 2, 1.0);
        let r = prune(&trace, &mi, &[0.1; 4]).unwrap();
        // Objective after steps 2 and 3 is identical because step 3 closes a cycle.
        assert_eq!(r.argmax_set, vec![2, 3]);
        assert_eq!(r.k_hat, 3);
        assert_eq!(r.pruned_graph, trace.mtg_prefix(3));
        assert!(r.objective_per_k[r.k_hat] >= r.objective_per_k[0]);
    }
}

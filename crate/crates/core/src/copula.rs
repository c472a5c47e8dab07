//! Rank-based copula mutual information and classical KDE plug-in estimators.
//!
//! The copula density of a pair is estimated on `[0,1]^2` from rank statistics
//! with a product kernel, reflecting every sample across the four sides of the
//! square so no kernel mass leaks out:
//!
//! ```text
//! c(u, v) = 1/(n h^2) sum_k sum_{(s,t)} K((u - s)/h) K((v - t)/h)
//!   (s, t) in {u_k, -u_k, 2 - u_k} x {v_k, -v_k, 2 - v_k}
//! ```
//!
//! The density is clamped to `[kappa1, kappa2]` and mutual information is the
//! midpoint-rule value of `∫∫ c log c` on an `m x m` grid.
//!
//! Because the nine reflections form a product set, each sample contributes an
//! outer product of two reflected univariate kernel profiles. Profiles are
//! computed once per column, and a pair grid is their accumulated outer product.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ContinuousDataset;
use crate::error::{Error, Result};
use crate::graph::MetricMatrix;

/// Scale constant of the default copula bandwidth rule.
pub const DEFAULT_C0: f64 = 0.125;
pub const DEFAULT_KAPPA1: f64 = 0.01;
pub const DEFAULT_KAPPA2: f64 = 100.0;
pub const DEFAULT_GRID: usize = 256;
/// Positivity floor inside logarithms of unbounded-support KDEs.
pub const LOG_FLOOR: f64 = 1e-12;

/// Symmetric kernel supported on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `3/4 (1 - u^2)`
    #[default]
    Epanechnikov,
    /// `1 - |u|`
    Triangular,
    /// `15/16 (1 - u^2)^2`
    Biweight,
}

impl Kernel {
    pub fn eval(self, u: f64) -> f64 {
        if !(u.abs() <= 1.0) {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Triangular => 1.0 - u.abs(),
            Kernel::Biweight => {
                let t = 1.0 - u * u;
                0.9375 * t * t
            }
        }
    }

    /// Lipschitz constant on `[-1, 1]`.
    pub fn lipschitz(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.5,
            Kernel::Triangular => 1.0,
            Kernel::Biweight => 2.5 / 3f64.sqrt(),
        }
    }

    pub fn sup_norm(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 0.75,
            Kernel::Triangular => 1.0,
            Kernel::Biweight => 0.9375,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Triangular => "triangular",
            Kernel::Biweight => "biweight",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Kernel> {
        match s {
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "triangular" => Ok(Kernel::Triangular),
            "biweight" => Ok(Kernel::Biweight),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

/// Estimator constants for the copula metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopulaConfig {
    /// Bandwidth is `min(1, c0 (ln n / n)^(1/6))` unless `bandwidth` is set.
    pub c0: f64,
    pub bandwidth: Option<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
    pub grid: usize,
    pub kernel: Kernel,
}

impl Default for CopulaConfig {
    fn default() -> CopulaConfig {
        CopulaConfig {
            c0: DEFAULT_C0,
            bandwidth: None,
            kappa1: DEFAULT_KAPPA1,
            kappa2: DEFAULT_KAPPA2,
            grid: DEFAULT_GRID,
            kernel: Kernel::Epanechnikov,
        }
    }
}

impl CopulaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(Error::InvalidParameter(format!("c0 must be positive, got {}", self.c0)));
        }
        if let Some(h) = self.bandwidth {
            check_bandwidth(h)?;
        }
        check_bounds(self.kappa1, self.kappa2)?;
        check_grid(self.grid)
    }

    pub fn bandwidth_for(&self, n: usize) -> Result<f64> {
        match self.bandwidth {
            Some(h) => Ok(h),
            None => default_bandwidth(n, self.c0),
        }
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth must lie in (0, 1], got {h}")))
    }
}

fn check_bounds(kappa1: f64, kappa2: f64) -> Result<()> {
    if kappa1 > 0.0 && kappa1 < kappa2 && kappa2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "truncation bounds need 0 < kappa1 < kappa2, got [{kappa1}, {kappa2}]"
        )))
    }
}

fn check_grid(m: usize) -> Result<()> {
    if m >= 16 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid resolution must be at least 16, got {m}")))
    }
}

/// `min(1, c0 (ln n / n)^(1/6))`.
pub fn default_bandwidth(n: usize, c0: f64) -> Result<f64> {
    if n < 2 || !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("default bandwidth needs n >= 2 and c0 > 0, got n={n}, c0={c0}")));
    }
    let n = n as f64;
    Ok((c0 * (n.ln() / n).powf(1.0 / 6.0)).min(1.0))
}

/// Midpoint-rule mass tolerance of an untruncated grid: `10 L_K / (m h^2)`.
pub fn mass_tolerance(kernel: Kernel, m: usize, h: f64) -> f64 {
    10.0 * kernel.lipschitz() / (m as f64 * h * h)
}

/// Columnwise empirical CDF values `#{m : x_m <= x_k} / n`, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl RankMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.columns[col]
    }
}

/// Empirical CDF of one column; tied values share the largest rank.
pub fn rank_column(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let r = end as f64 / n as f64;
        for &k in &order[start..end] {
            out[k] = r;
        }
        start = end;
    }
    out
}

pub fn ranks(data: &ContinuousDataset) -> RankMatrix {
    RankMatrix {
        n: data.n(),
        columns: (0..data.dim()).map(|c| rank_column(&data.column(c))).collect(),
    }
}

/// The nine reflections of `(u, v)` across the sides of the unit square.
pub fn mirror_points(u: f64, v: f64) -> [(f64, f64); 9] {
    [
        (u, v),
        (-u, v),
        (u, -v),
        (-u, -v),
        (u, 2.0 - v),
        (-u, 2.0 - v),
        (2.0 - u, v),
        (2.0 - u, -v),
        (2.0 - u, 2.0 - v),
    ]
}

/// Midpoint of grid cell `a` on `[0, 1]`.
fn midpoint(a: usize, m: usize) -> f64 {
    (a as f64 + 0.5) / m as f64
}

/// Reflected univariate kernel profile of one sample on the midpoint grid,
/// `K((g - u)/h)/h + K((g + u)/h)/h + K((g - 2 + u)/h)/h`, nonzero only on
/// `[u - h, u + h]`.
#[derive(Debug, Clone)]
struct Profile {
    start: usize,
    values: Vec<f64>,
}

fn reflected_profile(u: f64, h: f64, m: usize, kernel: Kernel) -> Profile {
    let mf = m as f64;
    let lo = (((u - h) * mf - 0.5).ceil().max(0.0)) as usize;
    let hi = ((((u + h) * mf - 0.5).floor()).min(mf - 1.0)).max(-1.0);
    if hi < lo as f64 {
        return Profile { start: 0, values: Vec::new() };
    }
    let values = (lo..=hi as usize)
        .map(|a| {
            let g = midpoint(a, m);
            (kernel.eval((g - u) / h) + kernel.eval((g + u) / h) + kernel.eval((g - 2.0 + u) / h)) / h
        })
        .collect();
    Profile { start: lo, values }
}

fn column_profiles(u: &[f64], h: f64, m: usize, kernel: Kernel) -> Vec<Profile> {
    u.iter().map(|&x| reflected_profile(x, h, m, kernel)).collect()
}

/// Accumulates `sum_k p_k q_k^T / n`. Entry `(a, b)` is a sum over samples in
/// index order, so swapping the arguments yields the exact transpose.
fn outer_accumulate(p: &[Profile], q: &[Profile], m: usize) -> Vec<f64> {
    let mut grid = vec![0.0; m * m];
    for (pk, qk) in p.iter().zip(q) {
        for (da, &x) in pk.values.iter().enumerate() {
            let row = &mut grid[(pk.start + da) * m + qk.start..][..qk.values.len()];
            for (cell, &y) in row.iter_mut().zip(&qk.values) {
                *cell += x * y;
            }
        }
    }
    let n = p.len() as f64;
    grid.iter_mut().for_each(|c| *c /= n);
    grid
}

fn marginal_of(p: &[Profile], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for pk in p {
        for (da, &x) in pk.values.iter().enumerate() {
            out[pk.start + da] += x;
        }
    }
    let n = p.len() as f64;
    out.iter_mut().for_each(|c| *c /= n);
    out
}

/// Density values on the `m x m` midpoint grid of `[0,1]^2`, row index `a` for the first variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaGrid {
    m: usize,
    h: f64,
    values: Vec<f64>,
    bounds: Option<(f64, f64)>,
}

impl CopulaGrid {
    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.m + b]
    }

    /// `(kappa1, kappa2)` once truncated.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn is_truncated(&self) -> bool {
        self.bounds.is_some()
    }

    /// Midpoint-rule integral over the unit square.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.m * self.m) as f64
    }
}

fn check_ranks(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::InvalidData("rank columns are empty".into()));
    }
    if u.iter().chain(v).any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidData("rank values must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Untruncated mirror-reflection copula KDE on the midpoint grid.
pub fn copula_kde(u: &[f64], v: &[f64], h: f64, kernel: Kernel, m: usize) -> Result<CopulaGrid> {
    check_bandwidth(h)?;
    check_grid(m)?;
    check_ranks(u, v)?;
    let p = column_profiles(u, h, m, kernel);
    let q = column_profiles(v, h, m, kernel);
    Ok(CopulaGrid {
        m,
        h,
        values: outer_accumulate(&p, &q, m),
        bounds: None,
    })
}

/// Clamps every value to `[kappa1, kappa2]`.
pub fn truncate_grid(grid: &CopulaGrid, kappa1: f64, kappa2: f64) -> Result<CopulaGrid> {
    check_bounds(kappa1, kappa2)?;
    Ok(CopulaGrid {
        m: grid.m,
        h: grid.h,
        values: grid.values.iter().map(|c| c.clamp(kappa1, kappa2)).collect(),
        bounds: Some((kappa1, kappa2)),
    })
}

fn x_log_x(c: f64) -> f64 {
    if c > 0.0 {
        c * c.ln()
    } else {
        0.0
    }
}

/// `sum c log c / m^2`, summed so that a transposed grid gives the same bits.
fn symmetric_entropy_sum(values: &[f64], m: usize) -> f64 {
    let mut total = 0.0;
    for a in 0..m {
        total += x_log_x(values[a * m + a]);
        for b in (a + 1)..m {
            total += x_log_x(values[a * m + b]) + x_log_x(values[b * m + a]);
        }
    }
    total / (m * m) as f64
}

/// Midpoint-rule `∫∫ c log c` of a truncated grid.
pub fn mi_copula(grid: &CopulaGrid) -> Result<f64> {
    if !grid.is_truncated() {
        return Err(Error::InvalidParameter("mutual information needs a truncated grid".into()));
    }
    Ok(symmetric_entropy_sum(&grid.values, grid.m))
}

fn truncated_mi(p: &[Profile], q: &[Profile], config: &CopulaConfig) -> f64 {
    let m = config.grid;
    let mut grid = outer_accumulate(p, q, m);
    grid.iter_mut().for_each(|c| *c = c.clamp(config.kappa1, config.kappa2));
    symmetric_entropy_sum(&grid, m)
}

/// Copula mutual information of two raw columns.
pub fn mi_pair_copula(x: &[f64], y: &[f64], config: &CopulaConfig) -> Result<f64> {
    config.validate()?;
    let h = config.bandwidth_for(x.len())?;
    let grid = copula_kde(&rank_column(x), &rank_column(y), h, config.kernel, config.grid)?;
    mi_copula(&truncate_grid(&grid, config.kappa1, config.kappa2)?)
}

/// Pairwise copula mutual information estimates; diagonal entries are `+inf`.
pub fn mi_estimates_copula(data: &ContinuousDataset, config: &CopulaConfig) -> Result<MetricMatrix> {
    config.validate()?;
    let d = data.dim();
    let h = config.bandwidth_for(data.n())?;
    let rk = ranks(data);
    let profiles: Vec<Vec<Profile>> = (0..d)
        .into_par_iter()
        .map(|c| column_profiles(rk.column(c), h, config.grid, config.kernel))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| truncated_mi(&profiles[i], &profiles[j], config))
        .collect();
    let mut out = MetricMatrix::infinite(d);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        out.set(i, j, v);
    }
    Ok(out)
}

/// Fermat metric `-I_ij` for every pair of columns.
pub fn mi_matrix_copula(data: &ContinuousDataset, config: &CopulaConfig) -> Result<MetricMatrix> {
    Ok(mi_estimates_copula(data, config)?.negated())
}

fn min_max_rescale(x: &[f64]) -> Option<Vec<f64>> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi > lo).then(|| x.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect())
}

/// `h = n^(-1/4)`.
pub fn plugin_bandwidth(n: usize) -> f64 {
    (n as f64).powf(-0.25).min(1.0)
}

/// Plug-in KDE mutual information `∫∫ p log p - ∫ p_i log p_i - ∫ p_j log p_j`
/// after min-max rescaling to `[0, 1]`, with mirror-reflected kernels and the
/// configured truncation and grid.
pub fn plugin_mi(x: &[f64], y: &[f64], h: f64, config: &CopulaConfig) -> Result<f64> {
    config.validate()?;
    check_bandwidth(h)?;
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let xs = min_max_rescale(x).ok_or(Error::ConstantColumn(0))?;
    let ys = min_max_rescale(y).ok_or(Error::ConstantColumn(1))?;
    let m = config.grid;
    let p = column_profiles(&xs, h, m, config.kernel);
    let q = column_profiles(&ys, h, m, config.kernel);
    let joint = truncated_mi(&p, &q, config);
    let marginal_term = |prof: &[Profile]| -> f64 {
        marginal_of(prof, m)
            .into_iter()
            .map(|c| x_log_x(c.clamp(config.kappa1, config.kappa2)))
            .sum::<f64>()
            / m as f64
    };
    Ok(joint - (marginal_term(&p) + marginal_term(&q)))
}

/// Fermat metric `-I_ij` from [`plugin_mi`] at bandwidth `h`, or `n^(-1/4)` when `None`.
pub fn mi_matrix_plugin(data: &ContinuousDataset, h: Option<f64>, config: &CopulaConfig) -> Result<MetricMatrix> {
    config.validate()?;
    let d = data.dim();
    let h = h.unwrap_or_else(|| plugin_bandwidth(data.n()));
    let columns = data.columns();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            plugin_mi(&columns[i], &columns[j], h, config).map_err(|e| match e {
                Error::ConstantColumn(0) => Error::ConstantColumn(i),
                Error::ConstantColumn(_) => Error::ConstantColumn(j),
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = MetricMatrix::infinite(d);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        out.set(i, j, -v);
    }
    Ok(out)
}

/// Differential entropy of a univariate KDE, integrated over `[min - h, max + h]`.
pub fn marginal_entropy(x: &[f64], h: f64, kernel: Kernel) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::ConstantColumn(0));
    }
    let (a, b) = (lo - h, hi + h);
    let cells = ((16.0 * (b - a) / h).ceil() as usize).clamp(2048, 1 << 20);
    let step = (b - a) / cells as f64;
    let mut dens = vec![0.0; cells];
    for &v in x {
        let first = (((v - h - a) / step - 0.5).ceil().max(0.0)) as usize;
        let last = (((v + h - a) / step - 0.5).floor() as usize).min(cells - 1);
        for (c, cell) in dens.iter_mut().enumerate().take(last + 1).skip(first) {
            let g = a + (c as f64 + 0.5) * step;
            *cell += kernel.eval((g - v) / h);
        }
    }
    let scale = 1.0 / (x.len() as f64 * h);
    Ok(-dens.iter().map(|&s| x_log_x((s * scale).max(LOG_FLOOR))).sum::<f64>() * step)
}

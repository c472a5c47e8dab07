//! Determinant-based information distance for discrete variables, its empirical
//! estimator, and exact population oracles (tree models, small Ising models).
//!
//! For a pair `(X_i, X_j)` with joint probability matrix `P_ij` and marginal
//! vectors `p_i`, `p_j`:
//!
//! ```text
//! d_ij = -log|det P_ij| + 1/2 sum_a log p_i(a) + 1/2 sum_b log p_j(b)
//! ```
//!
//! which is a tree metric on tree-structured models. Structure learning feeds the
//! order-preserving transform `-exp(-d_ij)` into the greedy learners; unlike
//! `d_ij` it is bounded in `[-1, 0]`.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use crate::data::{DiscreteDataset, Rng};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, MetricMatrix};

/// Determinants below this magnitude are treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Largest Ising model handled by exhaustive enumeration.
pub const MAX_ISING_DIM: usize = 15;

/// `s x s` joint probability table of two discrete variables, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbMatrix {
    s: usize,
    table: Vec<f64>,
}

impl JointProbMatrix {
    pub fn new(s: usize, table: Vec<f64>) -> Result<JointProbMatrix> {
        if table.len() != s * s {
            return Err(Error::DimensionMismatch {
                expected: s * s,
                got: table.len(),
            });
        }
        if table.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidData("negative or NaN probability".into()));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidData(format!("probabilities sum to {total}")));
        }
        Ok(JointProbMatrix { s, table })
    }

    pub fn alphabet(&self) -> usize {
        self.s
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.table[a * self.s + b]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Marginal of the first variable.
    pub fn row_marginal(&self) -> Vec<f64> {
        self.table.chunks(self.s).map(|r| r.iter().sum()).collect()
    }

    /// Marginal of the second variable.
    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.s).map(|b| (0..self.s).map(|a| self.get(a, b)).sum()).collect()
    }

    pub fn transpose(&self) -> JointProbMatrix {
        let s = self.s;
        JointProbMatrix {
            s,
            table: (0..s * s).map(|k| self.get(k % s, k / s)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &JointProbMatrix) -> f64 {
        self.table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.s, self.s, &self.table).determinant()
    }
}

/// Empirical joint of columns `i` and `j` over the declared alphabet.
pub fn empirical_joint(data: &DiscreteDataset, i: usize, j: usize) -> JointProbMatrix {
    assert_ne!(i, j, "empirical joint needs two distinct columns");
    let s = data.alphabet();
    let mut table = vec![0.0; s * s];
    for row in data.rows() {
        table[row[i] as usize * s + row[j] as usize] += 1.0;
    }
    let n = data.n() as f64;
    table.iter_mut().for_each(|c| *c /= n);
    JointProbMatrix { s, table }
}

/// Information distance of a joint table. Singular joints and zero marginals map to `+inf`.
pub fn info_distance(joint: &JointProbMatrix) -> f64 {
    let det = joint.determinant().abs();
    if det < SINGULAR_DET {
        return f64::INFINITY;
    }
    let (pi, pj) = (joint.row_marginal(), joint.col_marginal());
    if pi.iter().chain(&pj).any(|&p| p <= 0.0) {
        return f64::INFINITY;
    }
    let log_marginals: f64 = pi.iter().chain(&pj).map(|p| p.ln()).sum();
    -det.ln() + 0.5 * log_marginals
}

/// `-exp(-d)`, strictly increasing, with `+inf -> 0`.
pub fn neg_exp_metric(d: f64) -> f64 {
    if d == f64::INFINITY {
        0.0
    } else {
        -(-d).exp()
    }
}

/// Transformed empirical information distances for every pair of columns.
pub fn discrete_metric_matrix(data: &DiscreteDataset) -> MetricMatrix {
    MetricMatrix::from_fn(data.dim(), |i, j| neg_exp_metric(info_distance(&empirical_joint(data, i, j))))
}

/// Same construction from an arbitrary table of exact pairwise joints.
pub fn metric_from_joints(d: usize, mut joint: impl FnMut(usize, usize) -> JointProbMatrix) -> MetricMatrix {
    MetricMatrix::from_fn(d, |i, j| info_distance(&joint(i, j)))
}

fn check_stochastic_row(row: &[f64]) -> Result<()> {
    let total: f64 = row.iter().sum();
    if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidData(format!("row {row:?} is not a probability vector")));
    }
    Ok(())
}

fn sample_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn dirichlet_ones(s: usize, rng: &mut Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..s).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// Discrete distribution factorizing over a spanning tree, oriented away from `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTreeModel {
    tree: Graph,
    root: usize,
    s: usize,
    root_marginal: Vec<f64>,
    /// `(parent, child)` -> row-stochastic `s x s` table, `P(child = b | parent = a)` at `a * s + b`.
    conditionals: BTreeMap<(usize, usize), Vec<f64>>,
    parent: Vec<Option<usize>>,
    /// Vertices in breadth-first order from the root.
    order: Vec<usize>,
}

impl DiscreteTreeModel {
    pub fn new(
        tree: Graph,
        root: usize,
        root_marginal: Vec<f64>,
        conditionals: BTreeMap<(usize, usize), Vec<f64>>,
    ) -> Result<DiscreteTreeModel> {
        let d = tree.dim();
        if d == 0 || !tree.is_acyclic() || tree.edge_count() + 1 != d {
            return Err(Error::InvalidParameter("tree model needs a spanning tree".into()));
        }
        if root >= d {
            return Err(Error::VertexOutOfRange { vertex: root, d });
        }
        let s = root_marginal.len();
        if s < 2 {
            return Err(Error::InvalidParameter("alphabet size must be at least 2".into()));
        }
        check_stochastic_row(&root_marginal)?;

        let adj = tree.adjacency();
        let mut parent = vec![None; d];
        let mut order = Vec::with_capacity(d);
        let mut seen = vec![false; d];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }

        if conditionals.len() != d - 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} edge conditionals, got {}",
                d - 1,
                conditionals.len()
            )));
        }
        for (child, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                let table = conditionals.get(&(p, child)).ok_or_else(|| {
                    Error::InvalidParameter(format!("missing conditional for directed edge {p} -> {child}"))
                })?;
                if table.len() != s * s {
                    return Err(Error::DimensionMismatch {
                        expected: s * s,
                        got: table.len(),
                    });
                }
                for row in table.chunks(s) {
                    check_stochastic_row(row)?;
                }
            }
        }
        Ok(DiscreteTreeModel {
            tree,
            root,
            s,
            root_marginal,
            conditionals,
            parent,
            order,
        })
    }

    /// Random model: root marginal is an even mix of uniform and Dirichlet(1);
    /// each conditional row is `mixing * e_a + (1 - mixing) * Dirichlet(1)`.
    pub fn random(tree: Graph, root: usize, s: usize, mixing: f64, rng: &mut Rng) -> Result<DiscreteTreeModel> {
        if !(0.0..=1.0).contains(&mixing) {
            return Err(Error::InvalidParameter(format!("mixing weight {mixing} outside [0, 1]")));
        }
        let root_marginal = dirichlet_ones(s, rng).into_iter().map(|p| 0.5 * p + 0.5 / s as f64).collect();
        // Orientation is recomputed by `new`; walk the tree here to key the tables.
        let adj = tree.adjacency();
        let mut conditionals = BTreeMap::new();
        let mut seen = vec![false; tree.dim()];
        let mut queue = VecDeque::from([root.min(tree.dim().saturating_sub(1))]);
        if let Some(&r) = queue.front() {
            seen[r] = true;
        }
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                queue.push_back(v);
                let mut table = Vec::with_capacity(s * s);
                for a in 0..s {
                    let noise = dirichlet_ones(s, rng);
                    table.extend((0..s).map(|b| mixing * f64::from(u8::from(a == b)) + (1.0 - mixing) * noise[b]));
                }
                conditionals.insert((u, v), table);
            }
        }
        DiscreteTreeModel::new(tree, root, root_marginal, conditionals)
    }

    pub fn tree(&self) -> &Graph {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn alphabet(&self) -> usize {
        self.s
    }

    pub fn conditional(&self, parent: usize, child: usize) -> Option<&[f64]> {
        self.conditionals.get(&(parent, child)).map(Vec::as_slice)
    }

    /// Exact marginal of every vertex by forward propagation from the root.
    pub fn node_marginals(&self) -> Vec<Vec<f64>> {
        let s = self.s;
        let mut marg = vec![Vec::new(); self.tree.dim()];
        marg[self.root] = self.root_marginal.clone();
        for &v in &self.order[1..] {
            let p = self.parent[v].expect("non-root vertex has a parent");
            let cond = &self.conditionals[&(p, v)];
            marg[v] = (0..s).map(|b| (0..s).map(|a| marg[p][a] * cond[a * s + b]).sum()).collect();
        }
        marg
    }

    fn path_to_root(&self, mut v: usize) -> Vec<usize> {
        let mut path = vec![v];
        while let Some(p) = self.parent[v] {
            path.push(p);
            v = p;
        }
        path
    }

    /// Exact joint of `(X_i, X_j)`, chaining transition matrices along the tree path.
    pub fn exact_pairwise(&self, i: usize, j: usize) -> JointProbMatrix {
        assert_ne!(i, j, "pairwise joint needs two distinct vertices");
        let s = self.s;
        let marg = self.node_marginals();
        let up_i = self.path_to_root(i);
        let up_j = self.path_to_root(j);
        let lca = *up_i.iter().find(|v| up_j.contains(v)).expect("tree is connected");

        // transition[a * s + b] = P(X_current = b | X_i = a)
        let mut transition: Vec<f64> = (0..s * s).map(|k| f64::from(u8::from(k / s == k % s))).collect();
        let compose = |t: &[f64], step: &[f64]| -> Vec<f64> {
            (0..s * s)
                .map(|k| {
                    let (a, b) = (k / s, k % s);
                    (0..s).map(|c| t[a * s + c] * step[c * s + b]).sum()
                })
                .collect()
        };

        for w in up_i.windows(2).take_while(|w| w[0] != lca) {
            let (child, parent) = (w[0], w[1]);
            let cond = &self.conditionals[&(parent, child)];
            // P(parent = b | child = a) by Bayes' rule.
            let step: Vec<f64> = (0..s * s)
                .map(|k| {
                    let (a, b) = (k / s, k % s);
                    let denom = marg[child][a];
                    if denom > 0.0 {
                        marg[parent][b] * cond[b * s + a] / denom
                    } else {
                        1.0 / s as f64
                    }
                })
                .collect();
            transition = compose(&transition, &step);
        }
        let down: Vec<usize> = up_j.iter().copied().take_while(|&v| v != lca).collect();
        for &child in down.iter().rev() {
            let parent = self.parent[child].expect("below the common ancestor");
            transition = compose(&transition, &self.conditionals[&(parent, child)]);
        }

        let table = (0..s * s).map(|k| marg[i][k / s] * transition[k]).collect();
        JointProbMatrix { s, table }
    }

    /// Ancestral sampling.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> DiscreteDataset {
        let d = self.tree.dim();
        let s = self.s;
        let mut cells = vec![0u32; n * d];
        for row in cells.chunks_mut(d) {
            row[self.root] = sample_categorical(&self.root_marginal, rng) as u32;
            for &v in &self.order[1..] {
                let p = self.parent[v].expect("non-root vertex has a parent");
                let a = row[p] as usize;
                let cond = &self.conditionals[&(p, v)];
                row[v] = sample_categorical(&cond[a * s..(a + 1) * s], rng) as u32;
            }
        }
        DiscreteDataset::new(n.max(1), d, s, cells).expect("labels within alphabet")
    }
}

pub fn tree_exact_pairwise(model: &DiscreteTreeModel, i: usize, j: usize) -> JointProbMatrix {
    model.exact_pairwise(i, j)
}

pub fn sample_discrete_tree(model: &DiscreteTreeModel, n: usize, seed: u64) -> DiscreteDataset {
    model.sample(n, &mut crate::data::seeded_rng(seed))
}

/// Pairwise binary Markov random field on `{-1, +1}^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    graph: Graph,
    theta: BTreeMap<Edge, f64>,
    phi: Vec<f64>,
}

impl IsingModel {
    pub fn new(graph: Graph, theta: BTreeMap<Edge, f64>, phi: Vec<f64>) -> Result<IsingModel> {
        if phi.len() != graph.dim() {
            return Err(Error::DimensionMismatch {
                expected: graph.dim(),
                got: phi.len(),
            });
        }
        if theta.len() != graph.edge_count() || theta.keys().any(|e| !graph.contains(e.i, e.j)) {
            return Err(Error::InvalidParameter("couplings must be keyed exactly by the graph edges".into()));
        }
        Ok(IsingModel { graph, theta, phi })
    }

    /// Same coupling on every edge, same field on every vertex.
    pub fn uniform(graph: Graph, coupling: f64, field: f64) -> IsingModel {
        let theta = graph.edges().map(|e| (e, coupling)).collect();
        let phi = vec![field; graph.dim()];
        IsingModel { graph, theta, phi }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    fn check_size(&self) -> Result<()> {
        let d = self.dim();
        if d > MAX_ISING_DIM {
            return Err(Error::TooLarge { d, max: MAX_ISING_DIM });
        }
        Ok(())
    }

    /// Normalized probability of every configuration; bit `k` of the index set means `x_k = +1`.
    fn configuration_masses(&self) -> Vec<f64> {
        let d = self.dim();
        let spin = |x: usize, k: usize| if x >> k & 1 == 1 { 1.0 } else { -1.0 };
        let energies: Vec<f64> = (0..1usize << d)
            .map(|x| {
                let pair: f64 = self.theta.iter().map(|(e, t)| t * spin(x, e.i) * spin(x, e.j)).sum();
                let field: f64 = self.phi.iter().enumerate().map(|(k, f)| f * spin(x, k)).sum();
                pair + field
            })
            .collect();
        let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = energies.iter().map(|e| (e - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }

    /// Exact joint of `(X_i, X_j)`; state 0 is spin `-1`, state 1 is spin `+1`.
    pub fn exact_pairwise(&self, i: usize, j: usize) -> Result<JointProbMatrix> {
        self.check_size()?;
        if i == j || i >= self.dim() || j >= self.dim() {
            return Err(Error::InvalidParameter(format!("invalid vertex pair ({i}, {j})")));
        }
        let mut table = vec![0.0; 4];
        for (x, p) in self.configuration_masses().into_iter().enumerate() {
            table[(x >> i & 1) * 2 + (x >> j & 1)] += p;
        }
        Ok(JointProbMatrix { s: 2, table })
    }

    /// Exact information distances of all pairs from a single enumeration.
    pub fn exact_info_distances(&self) -> Result<MetricMatrix> {
        self.check_size()?;
        let d = self.dim();
        let masses = self.configuration_masses();
        let mut tables = vec![[0.0f64; 4]; d * d];
        for (x, p) in masses.into_iter().enumerate() {
            for i in 0..d {
                for j in (i + 1)..d {
                    tables[i * d + j][(x >> i & 1) * 2 + (x >> j & 1)] += p;
                }
            }
        }
        Ok(metric_from_joints(d, |i, j| JointProbMatrix {
            s: 2,
            table: tables[i * d + j].to_vec(),
        }))
    }
}

pub fn ising_exact_pairwise(model: &IsingModel, i: usize, j: usize) -> Result<JointProbMatrix> {
    model.exact_pairwise(i, j)
}

//! Undirected graphs, pairwise metric tables and the greedy structure learners.
//!
//! A [`MetricMatrix`] assigns every unordered vertex pair an extended-real value
//! (`f64::INFINITY` marks a pair that can never become an edge). Both learners in
//! [`greedy`] consume the same ascending edge stream, so their outputs and their
//! per-iteration prefixes are directly comparable.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod crucial;
pub mod geodesic;
pub mod greedy;
pub mod recovery;

pub use crucial::{crucial_pairs_bruteforce, min_crucial_gap, CrucialPair, MAX_CRUCIAL_DIM};
pub use geodesic::{geodesic_edge_set, is_fermat_metric, FermatCheck, FermatViolation, GeodesicResult};
pub use greedy::{forms_triangle, mst, mtg, run_greedy, sorted_edge_stream, GreedyTrace, TraceRecord};
pub use recovery::{recovery_metrics, RecoveryMetrics};

/// An undirected edge stored with `i < j`. Ordering is lexicographic on `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
}

impl Edge {
    /// Normalizes the endpoint order. Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Edge {
        assert_ne!(a, b, "self-loop at vertex {a}");
        if a < b {
            Edge { i: a, j: b }
        } else {
            Edge { i: b, j: a }
        }
    }

    pub fn try_new(a: usize, b: usize) -> Result<Edge> {
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        Ok(Edge::new(a, b))
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.i {
            self.j
        } else {
            self.i
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

impl From<(usize, usize)> for Edge {
    fn from((a, b): (usize, usize)) -> Edge {
        Edge::new(a, b)
    }
}

/// Simple undirected graph on vertices `0..d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    d: usize,
    edges: BTreeSet<Edge>,
}

impl Graph {
    pub fn empty(d: usize) -> Graph {
        Graph {
            d,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges<I, E>(d: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = E>,
        E: Into<(usize, usize)>,
    {
        let mut g = Graph::empty(d);
        for e in edges {
            let (a, b) = e.into();
            g.insert(a, b)?;
        }
        Ok(g)
    }

    /// Adds the edge `{a, b}`; returns `false` if it was already present.
    pub fn insert(&mut self, a: usize, b: usize) -> Result<bool> {
        for v in [a, b] {
            if v >= self.d {
                return Err(Error::VertexOutOfRange { vertex: v, d: self.d });
            }
        }
        let e = Edge::try_new(a, b)?;
        Ok(self.edges.insert(e))
    }

    pub(crate) fn insert_edge(&mut self, e: Edge) {
        debug_assert!(e.j < self.d);
        self.edges.insert(e);
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a != b && self.edges.contains(&Edge::new(a, b))
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.d];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.d];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn isolated_vertices(&self) -> Vec<usize> {
        self.degrees()
            .into_iter()
            .enumerate()
            .filter(|&(_, k)| k == 0)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        let mut uf = greedy::UnionFind::new(self.d);
        self.edges.iter().all(|e| uf.union(e.i, e.j))
    }

    pub fn is_triangle_free(&self) -> bool {
        let adj = self.adjacency();
        self.edges.iter().all(|e| !sorted_intersect(&adj[e.i], &adj[e.j]))
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = greedy::UnionFind::new(self.d);
        for e in &self.edges {
            uf.union(e.i, e.j);
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for v in 0..self.d {
            by_root.entry(uf.find(v)).or_default().push(v);
        }
        let mut comps: Vec<Vec<usize>> = by_root.into_values().collect();
        comps.sort_by_key(|c| c[0]);
        comps
    }
}

fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Symmetric table of pairwise metric values. The diagonal is always `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    d: usize,
    values: Vec<f64>,
}

impl MetricMatrix {
    /// All off-diagonal entries start at `+inf`.
    pub fn infinite(d: usize) -> MetricMatrix {
        MetricMatrix {
            d,
            values: vec![f64::INFINITY; d * d],
        }
    }

    /// Builds a matrix from a function evaluated once per unordered pair `i < j`.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> MetricMatrix {
        let mut m = MetricMatrix::infinite(d);
        for i in 0..d {
            for j in (i + 1)..d {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Validates a dense row table. Off-diagonal entries must be symmetric and
    /// either finite or `+inf`; the supplied diagonal is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<MetricMatrix> {
        let d = rows.len();
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        let mut m = MetricMatrix::infinite(d);
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b) = (rows[i][j], rows[j][i]);
                if a.is_nan() || a == f64::NEG_INFINITY {
                    return Err(Error::InvalidData(format!("metric entry ({i}, {j}) is {a}")));
                }
                if a != b {
                    return Err(Error::Asymmetric { i, j });
                }
                m.set(i, j, a);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn edge_value(&self, e: Edge) -> f64 {
        self.get(e.i, e.j)
    }

    /// Sets both `(i, j)` and `(j, i)`. Diagonal writes are ignored.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            return;
        }
        self.values[i * self.d + j] = v;
        self.values[j * self.d + i] = v;
    }

    /// Applies `f` to every finite off-diagonal entry; `+inf` entries stay infinite.
    pub fn map_finite(&self, mut f: impl FnMut(f64) -> f64) -> MetricMatrix {
        MetricMatrix::from_fn(self.d, |i, j| {
            let v = self.get(i, j);
            if v.is_finite() {
                f(v)
            } else {
                v
            }
        })
    }

    /// Entrywise `-x` on finite entries.
    pub fn negated(&self) -> MetricMatrix {
        self.map_finite(|v| -v)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.d.max(1)).take(self.d).map(<[f64]>::to_vec).collect()
    }
}

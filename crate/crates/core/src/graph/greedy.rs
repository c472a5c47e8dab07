//! Chow-Liu (Kruskal) and minimum triangle-free graph learners over a shared
//! ascending edge stream.

use super::{sorted_intersect, Edge, Graph, MetricMatrix};

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; `false` if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Dense adjacency bitset, used for the triangle test against the considered set.
pub(crate) struct AdjBits {
    words: usize,
    bits: Vec<u64>,
}

impl AdjBits {
    pub(crate) fn new(d: usize) -> AdjBits {
        let words = d.div_ceil(64).max(1);
        AdjBits {
            words,
            bits: vec![0; words * d],
        }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words..(v + 1) * self.words]
    }

    pub(crate) fn insert(&mut self, e: Edge) {
        self.bits[e.i * self.words + e.j / 64] |= 1 << (e.j % 64);
        self.bits[e.j * self.words + e.i / 64] |= 1 << (e.i % 64);
    }

    pub(crate) fn share_neighbor(&self, a: usize, b: usize) -> bool {
        self.row(a).iter().zip(self.row(b)).any(|(x, y)| x & y != 0)
    }
}

/// All pairs with finite metric, ascending by value, ties broken by `(i, j)`.
pub fn sorted_edge_stream(metric: &MetricMatrix) -> Vec<(Edge, f64)> {
    let d = metric.dim();
    let mut stream = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = metric.get(i, j);
            if v.is_finite() {
                stream.push((Edge { i, j }, v));
            }
        }
    }
    stream.sort_by(|(ea, va), (eb, vb)| va.total_cmp(vb).then(ea.cmp(eb)));
    stream
}

/// Chow-Liu forest: Kruskal over the finite edge stream.
pub fn mst(metric: &MetricMatrix) -> Graph {
    let d = metric.dim();
    let mut uf = UnionFind::new(d);
    let mut g = Graph::empty(d);
    for (e, _) in sorted_edge_stream(metric) {
        if uf.union(e.i, e.j) {
            g.insert_edge(e);
        }
    }
    g
}

/// Minimum triangle-free graph. An edge is rejected when its endpoints already
/// share a neighbor among all previously *considered* edges, accepted or not.
pub fn mtg(metric: &MetricMatrix) -> Graph {
    let stream: Vec<Edge> = sorted_edge_stream(metric).into_iter().map(|(e, _)| e).collect();
    mtg_over_stream(metric.dim(), &stream)
}

pub(crate) fn mtg_over_stream(d: usize, stream: &[Edge]) -> Graph {
    let mut considered = AdjBits::new(d);
    let mut g = Graph::empty(d);
    for &e in stream {
        if !considered.share_neighbor(e.i, e.j) {
            g.insert_edge(e);
        }
        considered.insert(e);
    }
    g
}

/// True iff the endpoints of `e` have a common neighbor in `g`.
pub fn forms_triangle(g: &Graph, e: Edge) -> bool {
    let adj = g.adjacency();
    sorted_intersect(&adj[e.i], &adj[e.j])
}

/// One accept/reject decision of the joint greedy run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub edge: Edge,
    pub value: f64,
    /// 1-based position in the edge stream.
    pub rank: usize,
    pub accepted_by_mst: bool,
    pub accepted_by_mtg: bool,
}

/// Joint execution trace of both learners. Prefix `k` holds the first `k` records.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    d: usize,
    records: Vec<TraceRecord>,
}

impl GreedyTrace {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn prefix_graph(&self, k: usize, keep: impl Fn(&TraceRecord) -> bool) -> Graph {
        let mut g = Graph::empty(self.d);
        for r in self.records.iter().take(k).filter(|r| keep(r)) {
            g.insert_edge(r.edge);
        }
        g
    }

    /// `E_k`: every edge considered in the first `k` iterations.
    pub fn considered_prefix(&self, k: usize) -> Graph {
        self.prefix_graph(k, |_| true)
    }

    /// `E_k^t`: the Chow-Liu forest after `k` iterations.
    pub fn mst_prefix(&self, k: usize) -> Graph {
        self.prefix_graph(k, |r| r.accepted_by_mst)
    }

    /// `E_k^g`: the triangle-free graph after `k` iterations.
    pub fn mtg_prefix(&self, k: usize) -> Graph {
        self.prefix_graph(k, |r| r.accepted_by_mtg)
    }

    pub fn mst_graph(&self) -> Graph {
        self.mst_prefix(self.len())
    }

    pub fn mtg_graph(&self) -> Graph {
        self.mtg_prefix(self.len())
    }
}

/// Runs both learners over the shared stream and records every decision.
pub fn run_greedy(metric: &MetricMatrix) -> GreedyTrace {
    let d = metric.dim();
    let mut uf = UnionFind::new(d);
    let mut considered = AdjBits::new(d);
    let records = sorted_edge_stream(metric)
        .into_iter()
        .enumerate()
        .map(|(idx, (edge, value))| {
            let accepted_by_mst = uf.union(edge.i, edge.j);
            let accepted_by_mtg = !considered.share_neighbor(edge.i, edge.j);
            considered.insert(edge);
            TraceRecord {
                edge,
                value,
                rank: idx + 1,
                accepted_by_mst,
                accepted_by_mtg,
            }
        })
        .collect();
    GreedyTrace { d, records }
}

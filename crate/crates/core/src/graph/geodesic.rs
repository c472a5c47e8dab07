//! Hop-count geodesics and the brute-force Fermat-metric verifier.

use std::collections::{BTreeSet, VecDeque};

use super::{Edge, Graph, MetricMatrix};
use crate::error::{Error, Result};

/// Edges on hop-shortest paths between two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicResult {
    /// `None` when the endpoints are disconnected.
    pub hop_distance: Option<usize>,
    pub edge_set: BTreeSet<Edge>,
}

fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::from([src]);
    dist[src] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

fn on_geodesic(e: Edge, from_i: &[usize], from_j: &[usize], hops: usize) -> bool {
    let through = |a: usize, b: usize| {
        from_i[a] != usize::MAX && from_j[b] != usize::MAX && from_i[a] + 1 + from_j[b] == hops
    };
    through(e.i, e.j) || through(e.j, e.i)
}

/// Union of all hop-shortest `i`-`j` paths, found from the BFS level sets of
/// both endpoints: `(u, v)` lies on a geodesic iff `dist(i,u) + 1 + dist(v,j)`
/// equals `dist(i,j)` for one of its orientations.
pub fn geodesic_edge_set(g: &Graph, i: usize, j: usize) -> GeodesicResult {
    assert_ne!(i, j, "geodesic query needs distinct endpoints");
    let adj = g.adjacency();
    let from_i = bfs(&adj, i);
    let hops = from_i[j];
    if hops == usize::MAX {
        return GeodesicResult {
            hop_distance: None,
            edge_set: BTreeSet::new(),
        };
    }
    let from_j = bfs(&adj, j);
    let edge_set = g.edges().filter(|&e| on_geodesic(e, &from_i, &from_j, hops)).collect();
    GeodesicResult {
        hop_distance: Some(hops),
        edge_set,
    }
}

/// A failed Fermat condition.
#[derive(Debug, Clone, PartialEq)]
pub enum FermatViolation {
    /// `Path(inner) ⊊ Path(outer)` but `d_inner >= d_outer`.
    Containment {
        inner: Edge,
        outer: Edge,
        inner_value: f64,
        outer_value: f64,
    },
    /// Non-edge whose metric does not exceed the maximum over its geodesic.
    Variational {
        pair: Edge,
        value: f64,
        path_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermatCheck {
    pub holds: bool,
    pub violations: Vec<FermatViolation>,
}

struct PairGeodesic {
    pair: Edge,
    bits: Vec<u64>,
    count: u32,
}

fn is_strict_subset(a: &PairGeodesic, b: &PairGeodesic) -> bool {
    a.count < b.count && a.bits.iter().zip(&b.bits).all(|(x, y)| x & !y == 0)
}

/// Exhaustive check of the Fermat property of `metric` on `g`.
///
/// Covers every ordered pair of connected vertex pairs for geodesic containment,
/// and every connected non-edge for the variational inequality. Cost grows like
/// `d^4 * |E| / 64`; intended for small graphs.
pub fn is_fermat_metric(g: &Graph, metric: &MetricMatrix) -> Result<FermatCheck> {
    let d = g.dim();
    if metric.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: metric.dim(),
        });
    }
    let adj = g.adjacency();
    let edges: Vec<Edge> = g.edges().collect();
    let words = edges.len().div_ceil(64).max(1);
    let dist: Vec<Vec<usize>> = (0..d).map(|v| bfs(&adj, v)).collect();

    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let hops = dist[i][j];
            if hops == usize::MAX {
                continue;
            }
            let mut bits = vec![0u64; words];
            let mut count = 0;
            for (k, &e) in edges.iter().enumerate() {
                if on_geodesic(e, &dist[i], &dist[j], hops) {
                    bits[k / 64] |= 1 << (k % 64);
                    count += 1;
                }
            }
            pairs.push(PairGeodesic {
                pair: Edge { i, j },
                bits,
                count,
            });
        }
    }

    let mut violations = Vec::new();
    for inner in &pairs {
        for outer in &pairs {
            if !is_strict_subset(inner, outer) {
                continue;
            }
            let (a, b) = (metric.edge_value(inner.pair), metric.edge_value(outer.pair));
            if !(a < b) {
                violations.push(FermatViolation::Containment {
                    inner: inner.pair,
                    outer: outer.pair,
                    inner_value: a,
                    outer_value: b,
                });
            }
        }
    }

    for p in &pairs {
        if g.contains(p.pair.i, p.pair.j) {
            continue;
        }
        let path_max = edges
            .iter()
            .enumerate()
            .filter(|(k, _)| p.bits[k / 64] >> (k % 64) & 1 == 1)
            .map(|(_, &e)| metric.edge_value(e))
            .fold(f64::NEG_INFINITY, f64::max);
        let value = metric.edge_value(p.pair);
        if !(value > path_max) {
            violations.push(FermatViolation::Variational {
                pair: p.pair,
                value,
                path_max,
            });
        }
    }

    Ok(FermatCheck {
        holds: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(edges: &[(usize, usize)]) -> BTreeSet<Edge> {
        edges.iter().map(|&(a, b)| Edge::new(a, b)).collect()
    }

    #[test]
    fn path_geodesic() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let r = geodesic_edge_set(&g, 0, 2);
        assert_eq!(r.hop_distance, Some(2));
        assert_eq!(r.edge_set, set(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn four_cycle_has_two_geodesics() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let r = geodesic_edge_set(&g, 0, 2);
        assert_eq!(r.hop_distance, Some(2));
        assert_eq!(r.edge_set, set(&[(0, 1), (1, 2), (2, 3), (0, 3)]));
        let r = geodesic_edge_set(&g, 0, 1);
        assert_eq!(r.edge_set, set(&[(0, 1)]));
    }

    #[test]
    fn disconnected_geodesic() {
        let g = Graph::from_edges(4, [(0, 1)]).unwrap();
        let r = geodesic_edge_set(&g, 0, 3);
        assert_eq!(r.hop_distance, None);
        assert!(r.edge_set.is_empty());
    }

    #[test]
    fn fermat_on_short_path() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut m = MetricMatrix::infinite(3);
        m.set(0, 1, 1.0);
        m.set(1, 2, 1.5);
        m.set(0, 2, 3.0);
        let check = is_fermat_metric(&g, &m).unwrap();
        assert!(check.holds, "{:?}", check.violations);

        m.set(0, 2, 1.2);
        let check = is_fermat_metric(&g, &m).unwrap();
        assert!(!check.holds);
        assert!(check.violations.iter().any(|v| matches!(
            v,
            FermatViolation::Variational { pair, path_max, .. } if *pair == Edge::new(0, 2) && *path_max == 1.5
        )));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = Graph::empty(3);
        assert!(is_fermat_metric(&g, &MetricMatrix::infinite(4)).is_err());
    }
}

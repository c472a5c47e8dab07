//! Brute-force diagnostics for order flips that change the MTG output.

use std::collections::BTreeSet;

use super::greedy::{mtg_over_stream, sorted_edge_stream};
use super::{Edge, MetricMatrix};
use crate::error::{Error, Result};

/// Largest dimension accepted by [`crucial_pairs_bruteforce`].
pub const MAX_CRUCIAL_DIM: usize = 12;

/// Two edges adjacent in the stream, earlier edge first.
pub type CrucialPair = (Edge, Edge);

/// Adjacent transpositions of the finite edge stream whose swap changes the
/// output of [`mtg`](super::mtg). An under-approximation of the full set of
/// order-sensitive pairs; finite values must be pairwise distinct.
pub fn crucial_pairs_bruteforce(metric: &MetricMatrix) -> Result<BTreeSet<CrucialPair>> {
    let d = metric.dim();
    if d > MAX_CRUCIAL_DIM {
        return Err(Error::TooLarge {
            d,
            max: MAX_CRUCIAL_DIM,
        });
    }
    let stream = sorted_edge_stream(metric);
    for w in stream.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(Error::TiedMetric(w[0].0.to_string(), w[1].0.to_string()));
        }
    }
    let mut order: Vec<Edge> = stream.iter().map(|&(e, _)| e).collect();
    let baseline = mtg_over_stream(d, &order);
    let mut crucial = BTreeSet::new();
    for k in 0..order.len().saturating_sub(1) {
        order.swap(k, k + 1);
        if mtg_over_stream(d, &order) != baseline {
            crucial.insert((order[k + 1], order[k]));
        }
        order.swap(k, k + 1);
    }
    Ok(crucial)
}

/// Smallest metric gap over a crucial set.
pub fn min_crucial_gap(metric: &MetricMatrix, crucial: &BTreeSet<CrucialPair>) -> Result<f64> {
    crucial
        .iter()
        .map(|&(a, b)| (metric.edge_value(a) - metric.edge_value(b)).abs())
        .reduce(f64::min)
        .ok_or(Error::EmptyCrucialSet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> MetricMatrix {
        let mut m = MetricMatrix::infinite(3);
        m.set(0, 1, 1.0);
        m.set(0, 2, 2.0);
        m.set(1, 2, 3.0);
        m
    }

    #[test]
    fn triangle_crucial_set() {
        let c = crucial_pairs_bruteforce(&triangle()).unwrap();
        assert!(c.contains(&(Edge::new(0, 2), Edge::new(1, 2))));
        assert!(!c.contains(&(Edge::new(0, 1), Edge::new(0, 2))));
        assert_eq!(c.len(), 1);
        assert_eq!(min_crucial_gap(&triangle(), &c).unwrap(), 1.0);
    }

    #[test]
    fn single_edge_has_no_crucial_pairs() {
        let mut m = MetricMatrix::infinite(4);
        m.set(1, 3, 0.5);
        assert!(crucial_pairs_bruteforce(&m).unwrap().is_empty());
    }

    #[test]
    fn ties_and_size_are_rejected() {
        let mut m = triangle();
        m.set(1, 2, 2.0);
        assert!(matches!(crucial_pairs_bruteforce(&m), Err(Error::TiedMetric(..))));
        assert!(matches!(
            crucial_pairs_bruteforce(&MetricMatrix::infinite(13)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn gap_is_minimum_over_pairs() {
        let mut m = MetricMatrix::infinite(4);
        m.set(0, 1, 1.0);
        m.set(0, 2, 1.5);
        m.set(0, 3, 2.0);
        m.set(1, 2, 2.2);
        let c: BTreeSet<_> = [
            (Edge::new(0, 1), Edge::new(0, 2)),
            (Edge::new(0, 3), Edge::new(1, 2)),
        ]
        .into();
        assert!((min_crucial_gap(&m, &c).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(min_crucial_gap(&m, &BTreeSet::new()), Err(Error::EmptyCrucialSet));
    }
}

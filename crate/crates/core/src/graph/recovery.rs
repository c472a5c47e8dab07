use serde::{Deserialize, Serialize};

use super::Graph;

/// Edge-set overlap between an estimate and the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Size of the symmetric difference of the edge sets.
    pub hamming: usize,
    pub exact: bool,
}

/// Precision and recall are 1 when their denominator is 0.
pub fn recovery_metrics(estimated: &Graph, truth: &Graph) -> RecoveryMetrics {
    let est = estimated.edge_set();
    let tru = truth.edge_set();
    let tp = est.intersection(tru).count();
    let ratio = |den: usize| if den == 0 { 1.0 } else { tp as f64 / den as f64 };
    let precision = ratio(est.len());
    let recall = ratio(tru.len());
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RecoveryMetrics {
        precision,
        recall,
        f1,
        hamming: est.symmetric_difference(tru).count(),
        exact: est == tru,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let r = recovery_metrics(&g, &g);
        assert_eq!((r.precision, r.recall, r.f1, r.hamming, r.exact), (1.0, 1.0, 1.0, 0, true));
    }

    #[test]
    fn empty_estimate() {
        let truth = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let r = recovery_metrics(&Graph::empty(4), &truth);
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.precision, 1.0);
        assert_eq!(r.hamming, 3);
        assert!(!r.exact);
    }

    #[test]
    fn half_overlap() {
        let est = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let truth = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let r = recovery_metrics(&est, &truth);
        assert_eq!((r.precision, r.recall, r.hamming), (0.5, 0.5, 2));
        assert!((r.f1 - 0.5).abs() < 1e-15);
    }
}

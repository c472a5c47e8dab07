//! Shared fixtures for the Criterion benchmarks in `benches/`.

use fermat_core::synth::{self, GraphPattern};
use fermat_core::{seeded_rng, ContinuousDataset, MetricMatrix};
use rand::Rng;

/// Dense random metric on `d` vertices with values on a coarse lattice, so the
/// edge stream has ties.
pub fn random_metric(d: usize, seed: u64) -> MetricMatrix {
    let mut rng = seeded_rng(seed);
    MetricMatrix::from_fn(d, |_, _| f64::from(rng.random_range(0..1000u32)) / 100.0)
}

/// `n` samples from a hub-pattern Gaussian with `stars` stars of size 10.
pub fn hub_data(stars: usize, n: usize, seed: u64) -> ContinuousDataset {
    let pattern = GraphPattern::Hub { stars, star_size: 10 };
    let graph = synth::make_pattern_graph(&pattern, seed).expect("valid pattern");
    let model = synth::make_precision(&graph, seed).expect("positive definite");
    synth::sample_gaussian(&model, n, seed).expect("valid model")
}

/// Uniform pseudo-ranks in `[0, 1]`.
pub fn uniform_column(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| rng.random()).collect()
}

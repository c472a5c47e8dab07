//! Greedy structure learning with Fermat-type metrics.
//!
//! The crate provides the two greedy learners (maximum spanning tree and the
//! triangle-free MTG rule), exact population metrics for discrete models,
//! rank-based copula mutual information for continuous data, forest density
//! estimation with held-out pruning, and synthetic model generators.

pub mod copula;
pub mod data;
pub mod density;
pub mod discrete;
pub mod error;
pub mod graph;
pub mod pipeline;
pub mod synth;

pub use nalgebra;

pub use copula::{CopulaConfig, Kernel};
pub use data::{seeded_rng, ContinuousDataset, DiscreteDataset, Rng};
pub use density::{DensityConfig, HeldoutMode, PruneResult};
pub use error::{Error, Result};
pub use graph::{
    is_fermat_metric, mst, mtg, recovery_metrics, run_greedy, Edge, Graph, GreedyTrace, MetricMatrix,
    RecoveryMetrics,
};
pub use pipeline::{Distortion, ExperimentConfig, Learner, MetricMethod, ReplicationRecord, Summary};
pub use synth::{GaussianModel, GraphPattern};

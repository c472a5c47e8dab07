use fermat_core::copula::{self, CopulaConfig, Kernel};
use fermat_core::density;
use fermat_core::discrete::{self, DiscreteTreeModel, JointProbMatrix};
use fermat_core::graph::{sorted_edge_stream, GreedyTrace};
use fermat_core::{mst, mtg, run_greedy, seeded_rng, ContinuousDataset, Graph, MetricMatrix};
use proptest::prelude::*;

/// Random metric on `d` vertices; values drawn from a small lattice so ties occur.
fn metric_strategy() -> impl Strategy<Value = MetricMatrix> {
    (3usize..=12).prop_flat_map(|d| {
        let pairs = d * (d - 1) / 2;
        prop::collection::vec(prop_oneof![9 => (0u32..40).prop_map(|v| v as f64 / 8.0), 1 => Just(f64::INFINITY)], pairs)
            .prop_map(move |vals| {
                let mut m = MetricMatrix::infinite(d);
                let mut it = vals.into_iter();
                for i in 0..d {
                    for j in (i + 1)..d {
                        m.set(i, j, it.next().unwrap());
                    }
                }
                m
            })
    })
}

fn dataset_strategy() -> impl Strategy<Value = ContinuousDataset> {
    (2usize..=5, 5usize..=60).prop_flat_map(|(d, n)| {
        prop::collection::vec(-50.0f64..50.0, n * d).prop_map(move |cells| ContinuousDataset::new(n, d, cells).unwrap())
    })
}

fn prefix_graphs(trace: &GreedyTrace, k: usize) -> (Graph, Graph) {
    (trace.mst_prefix(k), trace.mtg_prefix(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spanning_forest_stays_inside_mtg_at_every_step(m in metric_strategy()) {
        let trace = run_greedy(&m);
        for k in 0..=trace.len() {
            let (t, g) = prefix_graphs(&trace, k);
            prop_assert!(t.edge_set().is_subset(g.edge_set()));
        }
    }

    #[test]
    fn learner_outputs_have_their_shape(m in metric_strategy()) {
        let t = mst(&m);
        let g = mtg(&m);
        prop_assert!(t.is_acyclic());
        prop_assert!(g.is_triangle_free());
        prop_assert_eq!(&t, &run_greedy(&m).mst_graph());
        prop_assert_eq!(&g, &run_greedy(&m).mtg_graph());
        prop_assert_eq!(mtg(&m), g);
    }

    #[test]
    fn spanning_forest_spans_the_finite_pairs(m in metric_strategy()) {
        let d = m.dim();
        let finite = Graph::from_edges(d, sorted_edge_stream(&m).into_iter().map(|(e, _)| (e.i, e.j))).unwrap();
        prop_assert_eq!(mst(&m).edge_count(), d - finite.components().len());
    }

    #[test]
    fn learners_ignore_strictly_increasing_transforms(m in metric_strategy()) {
        let warped = m.map_finite(|v| (v * 0.7).exp() - 3.0);
        prop_assert_eq!(mst(&m), mst(&warped));
        prop_assert_eq!(mtg(&m), mtg(&warped));
    }

    #[test]
    fn copula_grid_conserves_mass(
        u in prop::collection::vec(0.0f64..=1.0, 1..80),
        h in 0.05f64..=1.0,
        m in prop::sample::select(vec![16usize, 48, 128]),
    ) {
        let v: Vec<f64> = u.iter().rev().copied().collect();
        let grid = copula::copula_kde(&u, &v, h, Kernel::Epanechnikov, m).unwrap();
        prop_assert!((grid.mass() - 1.0).abs() <= copula::mass_tolerance(Kernel::Epanechnikov, m, h));
        prop_assert!(grid.values().iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn copula_mi_is_symmetric_and_bounded(data in dataset_strategy()) {
        let c = CopulaConfig { grid: 64, ..CopulaConfig::default() };
        let (x, y) = (data.column(0), data.column(1));
        let a = copula::mi_pair_copula(&x, &y, &c).unwrap();
        let b = copula::mi_pair_copula(&y, &x, &c).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        let bound = c.kappa2 * c.kappa1.ln().abs().max(c.kappa2.ln().abs());
        prop_assert!(a.abs() <= bound);
        let m = copula::mi_matrix_copula(&data, &c).unwrap();
        for i in 0..data.dim() {
            for j in 0..data.dim() {
                prop_assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn copula_metric_is_rank_invariant(data in dataset_strategy()) {
        let c = CopulaConfig { grid: 32, ..CopulaConfig::default() };
        let warped = data.map(|col, v| if col % 2 == 0 { v.powi(3) + 2.0 * v } else { (v / 10.0).exp() }).unwrap();
        let (a, b) = (copula::mi_matrix_copula(&data, &c).unwrap(), copula::mi_matrix_copula(&warped, &c).unwrap());
        prop_assert_eq!(a.rows(), b.rows());
    }

    #[test]
    fn ranks_count_values_at_or_below(x in prop::collection::vec(prop_oneof![(-5i32..5).prop_map(f64::from), -5.0f64..5.0], 1..40)) {
        let r = copula::rank_column(&x);
        let n = x.len() as f64;
        for (k, &xk) in x.iter().enumerate() {
            let count = x.iter().filter(|&&v| v <= xk).count() as f64;
            prop_assert_eq!(r[k], count / n);
        }
    }

    #[test]
    fn info_distance_is_symmetric_and_nonnegative(cells in prop::collection::vec(0.0f64..1.0, 9)) {
        let total: f64 = cells.iter().sum();
        prop_assume!(total > 1e-6);
        let p = JointProbMatrix::new(3, cells.iter().map(|c| c / total).collect()).unwrap();
        let (a, b) = (discrete::info_distance(&p), discrete::info_distance(&p.transpose()));
        prop_assert!(a == b || (a - b).abs() < 1e-10);
        prop_assert!(a >= -1e-10);
    }

    #[test]
    fn tree_information_distance_is_additive(seed in 0u64..1000, s in 2usize..=3) {
        let tree = Graph::from_edges(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let model = DiscreteTreeModel::random(tree, 0, s, 0.6, &mut seeded_rng(seed)).unwrap();
        let d = |i, j| discrete::info_distance(&model.exact_pairwise(i, j));
        let total = d(2, 4);
        prop_assume!(total.is_finite());
        let parts = d(2, 1) + d(1, 3) + d(3, 4);
        prop_assert!((total - parts).abs() < 1e-8 * (1.0 + total));
    }

    #[test]
    fn pruning_picks_largest_maximizer(m in metric_strategy(), ent in 0.0f64..0.5) {
        let trace = run_greedy(&m);
        let mi = m.map_finite(|v| 1.0 / (1.0 + v * v));
        let r = density::prune(&trace, &mi, &vec![ent; m.dim()]).unwrap();
        let best = r.objective_per_k[r.k_hat];
        prop_assert!(best >= r.objective_per_k[0]);
        prop_assert!(r.objective_per_k.iter().all(|&v| v <= best));
        prop_assert!(r.objective_per_k[r.k_hat + 1..].iter().all(|&v| v < best));
        prop_assert_eq!(&r.pruned_graph, &trace.mtg_prefix(r.k_hat));
        let counts: Vec<usize> = (0..=trace.len()).map(|k| trace.mtg_prefix(k).edge_count()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }
}

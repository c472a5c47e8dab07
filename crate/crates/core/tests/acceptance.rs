//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fermat_core::copula::{self, CopulaConfig, Kernel};
use fermat_core::data::seeded_rng;
use fermat_core::density::{self, DensityConfig, HeldoutMode, PruneConfig};
use fermat_core::discrete::{self, DiscreteTreeModel};
use fermat_core::nalgebra::DMatrix;
use fermat_core::pipeline::{self, ExperimentConfig};
use fermat_core::synth::{self, GaussianModel, GraphPattern};
use fermat_core::{is_fermat_metric, mst, mtg, run_greedy, ContinuousDataset, Edge, Graph, MetricMatrix};
use rand::seq::SliceRandom;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, budget: Duration, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = check();
    let took = start.elapsed();
    let pass = v.pass && took <= budget;
    println!(
        "[{}] criterion {id:>2} {name}: {} ({:.1}s, budget {}s)",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn relabel(g: &Graph, perm: &[usize]) -> Graph {
    Graph::from_edges(g.dim(), g.edges().map(|e| (perm[e.i], perm[e.j]))).unwrap()
}

fn gaussian_from_covariance(sigma: DMatrix<f64>) -> GaussianModel {
    let d = sigma.nrows();
    let mut omega = sigma.try_inverse().unwrap();
    // Exact zeros off the support for banded truths.
    for i in 0..d {
        for j in 0..d {
            if omega[(i, j)].abs() < 1e-12 {
                omega[(i, j)] = 0.0;
            }
        }
    }
    let omega = (&omega + omega.transpose()) * 0.5;
    GaussianModel::from_precision(vec![0.0; d], omega).unwrap()
}

fn chain_model(d: usize, rho: f64) -> GaussianModel {
    gaussian_from_covariance(DMatrix::from_fn(d, d, |i, j| rho.powi((i as i32 - j as i32).abs())))
}

fn bivariate(rho: f64) -> GaussianModel {
    chain_model(2, rho)
}

// 1
fn filtration() -> Verdict {
    let mut rng = seeded_rng(1);
    let mut ok = 0;
    let total = 1000;
    for _ in 0..total {
        let d = rng.random_range(4..=20);
        let mut m = MetricMatrix::infinite(d);
        for i in 0..d {
            for j in (i + 1)..d {
                let r: f64 = rng.random();
                // A few excluded pairs and coarse values to exercise ties.
                let v = if r < 0.05 { f64::INFINITY } else { (rng.random::<f64>() * 20.0).round() / 4.0 };
                m.set(i, j, v);
            }
        }
        let stream = fermat_core::graph::sorted_edge_stream(&m);
        let mut holds = true;
        for k in 0..=stream.len() {
            let mut prefix = MetricMatrix::infinite(d);
            for &(e, v) in &stream[..k] {
                prefix.set(e.i, e.j, v);
            }
            let (t, g) = (mst(&prefix), mtg(&prefix));
            if !t.edge_set().is_subset(g.edge_set()) {
                holds = false;
                break;
            }
        }
        ok += usize::from(holds);
    }
    Verdict {
        pass: ok == total,
        detail: format!("{ok}/{total} random metrics keep the spanning forest inside the MTG at every step"),
    }
}

fn random_tree(d: usize, rng: &mut fermat_core::Rng) -> Graph {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    let g = Graph::from_edges(d, (1..d).map(|k| (rng.random_range(0..k), k))).unwrap();
    relabel(&g, &perm)
}

fn additive_tree_metric(tree: &Graph, rng: &mut fermat_core::Rng) -> MetricMatrix {
    let d = tree.dim();
    let weights: BTreeMap<Edge, f64> = tree.edges().map(|e| (e, rng.random_range(0.5..2.0))).collect();
    let adj = tree.adjacency();
    let mut m = MetricMatrix::infinite(d);
    for s in 0..d {
        let mut dist = vec![f64::NAN; d];
        dist[s] = 0.0;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if dist[v].is_nan() {
                    dist[v] = dist[u] + weights[&Edge::new(u, v)];
                    stack.push(v);
                }
            }
        }
        for (t, &w) in dist.iter().enumerate().skip(s + 1) {
            m.set(s, t, w);
        }
    }
    m
}

/// Hop distance plus a small increasing function of the geodesic edge count, plus jitter.
fn hop_metric(g: &Graph, rng: &mut fermat_core::Rng) -> MetricMatrix {
    let d = g.dim();
    let scale = 0.5 / (g.edge_count() + 1) as f64;
    let mut m = MetricMatrix::infinite(d);
    for i in 0..d {
        for j in (i + 1)..d {
            let geo = fermat_core::graph::geodesic_edge_set(g, i, j);
            if let Some(hops) = geo.hop_distance {
                let jitter = rng.random::<f64>() * 0.1 * scale;
                m.set(i, j, hops as f64 + scale * geo.edge_set.len() as f64 + jitter);
            }
        }
    }
    m
}

fn cycle_graph(d: usize) -> Graph {
    Graph::from_edges(d, (0..d).map(|i| (i, (i + 1) % d))).unwrap()
}

/// Two hubs joined by internally disjoint paths of the given lengths (all at least 2).
fn theta_graph(lengths: &[usize]) -> Graph {
    let d = 2 + lengths.iter().map(|l| l - 1).sum::<usize>();
    let mut g = Graph::empty(d);
    let mut next = 2;
    for &len in lengths {
        let mut prev = 0;
        for _ in 0..len - 1 {
            g.insert(prev, next).unwrap();
            prev = next;
            next += 1;
        }
        g.insert(prev, 1).unwrap();
    }
    g
}

// 2
fn exact_recovery() -> Verdict {
    let mut rng = seeded_rng(2);
    let mut cases: Vec<(Graph, MetricMatrix)> = Vec::new();
    for _ in 0..120 {
        let d = rng.random_range(4..=15);
        let t = random_tree(d, &mut rng);
        let m = additive_tree_metric(&t, &mut rng);
        cases.push((t, m));
    }
    for k in 0..50 {
        let len = [4, 6, 4, 6, 5, 8, 10][k % 7];
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut rng);
        let g = relabel(&cycle_graph(len), &perm);
        let m = hop_metric(&g, &mut rng);
        cases.push((g, m));
    }
    for _ in 0..50 {
        let lengths: Vec<usize> = (0..rng.random_range(3..=4)).map(|_| rng.random_range(2..=4)).collect();
        let base = theta_graph(&lengths);
        let mut perm: Vec<usize> = (0..base.dim()).collect();
        perm.shuffle(&mut rng);
        let g = relabel(&base, &perm);
        let m = hop_metric(&g, &mut rng);
        cases.push((g, m));
    }
    let total = cases.len();
    let mut fermat_ok = 0;
    let mut recovered = 0;
    for (g, m) in &cases {
        assert!(g.is_triangle_free());
        if is_fermat_metric(g, m).unwrap().holds {
            fermat_ok += 1;
            recovered += usize::from(&mtg(m) == g);
        }
    }
    Verdict {
        pass: total >= 200 && fermat_ok == total && recovered == total,
        detail: format!("{total} graphs, {fermat_ok} validated Fermat, {recovered} recovered exactly"),
    }
}

fn five_node_model() -> DiscreteTreeModel {
    let tree = Graph::from_edges(5, [(0, 1), (0, 2), (1, 3), (1, 4)]).unwrap();
    DiscreteTreeModel::random(tree, 0, 2, 0.5, &mut seeded_rng(2024)).unwrap()
}

fn discrete_errors(model: &DiscreteTreeModel, n: usize, seeds: std::ops::Range<u64>) -> Vec<f64> {
    let d = model.tree().dim();
    let exact: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { 0.0 } else { (-discrete::info_distance(&model.exact_pairwise(i, j))).exp() })
                .collect()
        })
        .collect();
    let mut errs = Vec::new();
    for seed in seeds {
        let data = model.sample(n, &mut seeded_rng(seed));
        for i in 0..d {
            for j in (i + 1)..d {
                let est = (-discrete::info_distance(&discrete::empirical_joint(&data, i, j))).exp();
                errs.push((est - exact[i][j]).abs());
            }
        }
    }
    errs
}

// 3
fn discrete_concentration() -> Verdict {
    let model = five_node_model();
    let small = median(discrete_errors(&model, 1000, 0..200));
    let large = median(discrete_errors(&model, 4000, 1000..1200));
    let ratio = large / small;
    Verdict {
        pass: ratio <= 0.65,
        detail: format!("median error {small:.4} at n=1000, {large:.4} at n=4000, ratio {ratio:.3} (limit 0.65)"),
    }
}

// 4
fn discrete_recovery() -> Verdict {
    // Heap-shaped binary tree on 8 vertices.
    let tree = Graph::from_edges(8, (1..8).map(|v| ((v - 1) / 2, v))).unwrap();
    let mut ok = 0;
    for seed in 0..20u64 {
        let model = DiscreteTreeModel::random(tree.clone(), 0, 2, 0.5, &mut seeded_rng(seed)).unwrap();
        let data = model.sample(2000, &mut seeded_rng(10_000 + seed));
        ok += usize::from(mtg(&discrete::discrete_metric_matrix(&data)) == tree);
    }
    Verdict {
        pass: ok >= 18,
        detail: format!("{ok}/20 seeds recovered the tree (need 18)"),
    }
}

fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

fn copula_mi_sample(rho: f64, n: usize, seed: u64) -> f64 {
    let data = synth::sample_gaussian(&bivariate(rho), n, seed).unwrap();
    copula::mi_pair_copula(&data.column(0), &data.column(1), &CopulaConfig::default()).unwrap()
}

// 5
fn copula_accuracy() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, rho) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let truth = gaussian_mi(rho);
        let hits = (0..100u64)
            .filter(|&r| (copula_mi_sample(rho, 2000, 50_000 + 1000 * k as u64 + r) - truth).abs() <= 0.2)
            .count();
        pass &= hits >= 95;
        parts.push(format!("rho={rho}: {hits}/100"));
    }
    Verdict {
        pass,
        detail: format!("{} within 0.2 (need 95 each)", parts.join(", ")),
    }
}

// 6
fn copula_rate() -> Verdict {
    let truth = gaussian_mi(0.6);
    let err = |n: usize, base: u64| median((0..100u64).map(|r| (copula_mi_sample(0.6, n, base + r) - truth).abs()).collect());
    let (small, large) = (err(1000, 60_000), err(8000, 70_000));
    let ratio = large / small;
    Verdict {
        pass: ratio <= 0.7,
        detail: format!("median error {small:.4} at n=1000, {large:.4} at n=8000, ratio {ratio:.3} (limit 0.7)"),
    }
}

// 7
fn mass_conservation() -> Verdict {
    let mut rng = seeded_rng(7);
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let n = rng.random_range(1..=400);
        let h = if k % 4 == 0 { 1.0 } else { rng.random_range(0.05..=1.0) };
        let m = [16, 64, 256][k % 3];
        let kernel = [Kernel::Epanechnikov, Kernel::Triangular, Kernel::Biweight][k % 3];
        // Coarse values force ties and boundary ranks.
        let x: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 10.0).floor()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let grid = copula::copula_kde(&copula::rank_column(&x), &copula::rank_column(&y), h, kernel, m).unwrap();
        let dev = (grid.mass() - 1.0).abs();
        let tol = copula::mass_tolerance(kernel, m, h);
        worst = worst.max(dev / tol);
        ok += usize::from(dev <= tol && grid.values().iter().all(|&c| c >= 0.0));
    }
    Verdict {
        pass: ok == 100,
        detail: format!("{ok}/100 grids within tolerance, worst deviation {:.2e} of tolerance", worst),
    }
}

// 8
fn rank_invariance() -> Verdict {
    let pattern = GraphPattern::Hub { stars: 2, star_size: 3 };
    let config = CopulaConfig::default();
    let mut ok = 0;
    for seed in 0..50u64 {
        let truth = synth::make_pattern_graph(&pattern, seed).unwrap();
        let model = synth::make_precision(&truth, seed).unwrap();
        let raw = synth::sample_gaussian(&model, 300, seed).unwrap();
        let base = copula::mi_matrix_copula(&raw, &config).unwrap();
        let bits = |m: &MetricMatrix| m.rows().concat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let bc = copula::mi_matrix_copula(&synth::box_cox(&raw, 2.5).unwrap(), &config).unwrap();
        let np = copula::mi_matrix_copula(&synth::nonparanormal(&raw, &model).unwrap(), &config).unwrap();
        ok += usize::from(bits(&base) == bits(&bc) && bits(&base) == bits(&np));
    }
    Verdict {
        pass: ok == 50,
        detail: format!("{ok}/50 seeds bit-identical under Box-Cox and nonparanormal distortion"),
    }
}

// 9
fn nonparametric_recovery() -> Verdict {
    let d = 10;
    let cycle = cycle_graph(d);
    let omega = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            1.0
        } else if cycle.contains(i, j) {
            -0.45
        } else {
            0.0
        }
    });
    let model = GaussianModel::from_precision(vec![0.0; d], omega).unwrap();
    let mut ok = 0;
    for seed in 0..20u64 {
        let data = synth::sample_gaussian(&model, 2000, 90_000 + seed).unwrap();
        let metric = copula::mi_matrix_copula(&data, &CopulaConfig::default()).unwrap();
        ok += usize::from(mtg(&metric) == cycle);
    }
    Verdict {
        pass: ok >= 16,
        detail: format!("{ok}/20 seeds recovered the 10-cycle (partial correlation 0.45, need 16)"),
    }
}

fn split(model: &GaussianModel, n1: usize, n2: usize, seed: u64) -> (ContinuousDataset, ContinuousDataset) {
    let all = synth::sample_gaussian(model, n1 + n2, seed).unwrap();
    (all.slice_rows(0, n1), all.slice_rows(n1, n1 + n2))
}

fn pruned_graph(train: &ContinuousDataset, heldout: &ContinuousDataset) -> (Graph, fermat_core::GreedyTrace, usize) {
    let metric = copula::mi_matrix_copula(train, &CopulaConfig::default()).unwrap();
    let trace = run_greedy(&metric);
    let r = density::prune_with_heldout(&trace, heldout, &PruneConfig::default()).unwrap();
    (r.pruned_graph, trace, r.k_hat)
}

// 10
fn pruning_semantics() -> Verdict {
    let d_indep = 10;
    let indep = gaussian_from_covariance(DMatrix::identity(d_indep, d_indep));
    let edges: usize = (0..20u64)
        .map(|s| {
            let (tr, ho) = split(&indep, 500, 500, 100_000 + s);
            pruned_graph(&tr, &ho).0.edge_count()
        })
        .sum();
    let mean_edges = edges as f64 / 20.0;
    let chain = chain_model(6, 0.8);
    let truth = Graph::from_edges(6, (1..6).map(|i| (i - 1, i))).unwrap();
    let hits = (0..20u64)
        .filter(|&s| {
            let (tr, ho) = split(&chain, 500, 500, 110_000 + s);
            pruned_graph(&tr, &ho).0 == truth
        })
        .count();
    Verdict {
        pass: mean_edges <= 0.05 * d_indep as f64 && hits >= 16,
        detail: format!(
            "independent d={d_indep}: mean pruned edges {mean_edges:.2} (limit {:.2}); chain: {hits}/20 exact (need 16)",
            0.05 * d_indep as f64
        ),
    }
}

// 11
fn density_direction() -> Verdict {
    let chain = chain_model(6, 0.8);
    let cfg = DensityConfig::default();
    let mut ok = 0;
    for s in 0..20u64 {
        let (tr, ho) = split(&chain, 500, 500, 120_000 + s);
        let (_, trace, k_hat) = pruned_graph(&tr, &ho);
        let skeleton = trace.mst_prefix(k_hat);
        let fitted = density::fit_forest_density(&tr, &skeleton, &cfg).unwrap();
        let empty = density::fit_forest_density(&tr, &Graph::empty(6), &cfg).unwrap();
        let a = density::heldout_ll(&fitted, &ho, HeldoutMode::Kite).unwrap();
        let b = density::heldout_ll(&empty, &ho, HeldoutMode::Kite).unwrap();
        ok += usize::from(a > b);
    }
    Verdict {
        pass: ok >= 19,
        detail: format!("{ok}/20 seeds favour the fitted skeleton over the empty forest (need 19)"),
    }
}

// 12
fn scale() -> Verdict {
    let config = ExperimentConfig::default();
    let start = Instant::now();
    let rec = pipeline::run_replication(&config, 0, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        pass: secs < 180.0 && rec.d == 100,
        detail: format!(
            "d={} n1=n2=100 replication in {secs:.1}s: k_hat={}, {} pruned edges, F1 {:.3}, kite {:.2}",
            rec.d, rec.k_hat, rec.pruned_edges, rec.recovery.f1, rec.ll_kite
        ),
    }
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let results = [
        run(1, "filtration", s(10), filtration),
        run(2, "exact recovery on triangle-free graphs", s(30), exact_recovery),
        run(3, "discrete metric concentration", s(60), discrete_concentration),
        run(4, "discrete tree recovery", s(60), discrete_recovery),
        run(5, "copula MI accuracy", s(120), copula_accuracy),
        run(6, "copula MI rate", s(300), copula_rate),
        run(7, "copula KDE mass conservation", s(60), mass_conservation),
        run(8, "rank invariance", s(60), rank_invariance),
        run(9, "nonparametric cycle recovery", s(300), nonparametric_recovery),
        run(10, "held-out pruning", s(120), pruning_semantics),
        run(11, "forest density direction", s(120), density_direction),
        run(12, "full pipeline at d=100", s(180), scale),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

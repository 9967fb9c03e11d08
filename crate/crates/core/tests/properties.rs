//! Invariants over randomly generated inputs.

mod common;

use std::sync::Arc;

use common::{adjacency, brute_triangles};
use proptest::prelude::*;
use trigon_core::autodiff::{read_checkpoint, write_checkpoint, DMatrix};
use trigon_core::data::{load_dataset, make_split, Dataset, Part};
use trigon_core::diagnostics::{cheeger_bounds, resistance_per_edge, spectral_gap};
use trigon_core::geometry::{delaunay, knn_graph, FeatureMatrix, Metric};
use trigon_core::gnn::{gcn_propagation_matrix, GcnConfig, GcnModel};
use trigon_core::rng::SeedStream;
use trigon_core::selector::{incidence_matrix, reconstruct_graph, selection_probabilities};
use trigon_core::triangles::{
    build_candidates, enumerate_triangles, triangle_count_per_edge, CandidateTriangleSet,
};
use trigon_core::{Graph, SourceMask};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n)
            .prop_map(move |pairs| Graph::from_pairs(n, pairs).unwrap())
    })
}

fn connected_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let tree = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n), 0..2 * n);
        (tree, extra).prop_map(move |(parents, extra)| {
            let mut pairs: Vec<(usize, usize)> = parents
                .iter()
                .enumerate()
                .map(|(i, p)| (p.index(i + 1), i + 1))
                .collect();
            pairs.extend(extra);
            Graph::from_pairs(n, pairs).unwrap()
        })
    })
}

fn points_strategy() -> impl Strategy<Value = Vec<[f64; 2]>> {
    proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| [x, y]), 3..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_symmetric_and_simple(g in graph_strategy(30)) {
        let a = adjacency(&g);
        let mut degree_sum = 0;
        for u in 0..g.n() {
            prop_assert!(!a[u][u]);
            prop_assert!(g.neighbors(u).windows(2).all(|w| w[0] < w[1]));
            for &v in g.neighbors(u) {
                prop_assert!(g.has_edge(v, u));
            }
            degree_sum += g.degree(u);
        }
        prop_assert_eq!(degree_sum, 2 * g.m());
    }

    #[test]
    fn edge_triangle_counts_sum_to_three_per_triangle(g in graph_strategy(25)) {
        let total: usize = triangle_count_per_edge(&g).iter().map(|e| e.1).sum();
        prop_assert_eq!(total, 3 * enumerate_triangles(&g, SourceMask::ORIGINAL).len());
    }

    #[test]
    fn delaunay_faces_are_graph_triangles(pts in points_strategy()) {
        let planar = trigon_core::geometry::PlanarPointSet::new(pts).unwrap();
        if let Ok((g, faces)) = delaunay(&planar) {
            let tris = brute_triangles(&g);
            for f in faces {
                prop_assert!(tris.contains(&f.nodes()));
            }
        }
    }

    #[test]
    fn candidate_union_is_idempotent(g in graph_strategy(20), knn in graph_strategy(20)) {
        let n = g.n().max(knn.n());
        let pad = |h: &Graph| Graph::from_pairs(n, h.edges()).unwrap();
        let (g, knn) = (pad(&g), pad(&knn));
        let once = build_candidates(&g, &knn, &[]).unwrap();
        let again = CandidateTriangleSet::from_triangles(n, once.triangles().iter().copied()).unwrap();
        prop_assert_eq!(&once, &again);
        let twice = build_candidates(&g, &knn, once.triangles()).unwrap();
        prop_assert_eq!(once.len(), twice.len());
    }

    #[test]
    fn knn_graph_is_symmetric_with_min_degree_k(
        rows in proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, 3), 4..40),
        k in 1usize..4,
    ) {
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let g = knn_graph(&x, k, Metric::Euclidean).unwrap();
        for u in 0..g.n() {
            prop_assert!(g.degree(u) >= k);
        }
    }

    #[test]
    fn foster_theorem(g in connected_strategy(25)) {
        // the edge resistances of a connected graph sum to n - 1
        let total: f64 = resistance_per_edge(&g).iter().map(|e| e.1).sum();
        prop_assert!((total - (g.n() as f64 - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn resistance_triangle_bound(g in connected_strategy(25)) {
        let t = triangle_count_per_edge(&g);
        for ((_, r), (_, t)) in resistance_per_edge(&g).into_iter().zip(t) {
            prop_assert!(r <= 2.0 / (t as f64 + 2.0) + 1e-9);
        }
    }

    #[test]
    fn spectral_gap_range_and_cheeger(g in connected_strategy(9)) {
        let l2 = spectral_gap(&g);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&l2));
        prop_assert!(l2 > 1e-9);
        prop_assert!(cheeger_bounds(&g).holds(1e-9));
    }

    #[test]
    fn eval_probability_is_monotone_in_the_logit_gap(a in -10.0..10.0f64, b in -10.0..10.0f64, tau in 0.05..5.0f64) {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, a, 0.0, b]);
        let p = selection_probabilities(&s, tau);
        if a < b {
            prop_assert!(p[0] <= p[1]);
        }
        prop_assert_eq!(p[0] >= 0.5, a >= 0.0);
    }

    #[test]
    fn soft_count_equals_hard_count_on_binary_p(g in graph_strategy(15), mask in proptest::collection::vec(any::<bool>(), 0..200)) {
        let cands = CandidateTriangleSet::from_triangles(g.n(), enumerate_triangles(&g, SourceMask::ORIGINAL)).unwrap();
        let p: Vec<f64> = (0..cands.len()).map(|i| if mask.get(i).copied().unwrap_or(true) { 1.0 } else { 0.0 }).collect();
        let nodes: Vec<usize> = (0..g.n()).collect();
        let inc = DMatrix::from(&incidence_matrix(&cands, &nodes));
        let soft = &inc * DMatrix::from_column_slice(p.len(), 1, &p);
        let (rebuilt, _) = reconstruct_graph(&cands, &p).unwrap();
        for u in 0..g.n() {
            let hard = cands.incident(u).iter().filter(|&&t| p[t] == 1.0).count();
            prop_assert_eq!(soft[(u, 0)], hard as f64);
            prop_assert_eq!(rebuilt.degree(u) > 0, hard > 0);
        }
    }

    #[test]
    fn split_is_a_stratified_partition(labels in proptest::collection::vec(0usize..3, 5..80), seed in any::<u64>()) {
        let s = make_split(&labels, &mut SeedStream::new(seed).substream("split")).unwrap();
        let parts = s.parts(labels.len());
        prop_assert_eq!(parts.len(), labels.len());
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), labels.len());
        prop_assert!(!s.train.is_empty());
        prop_assert!(parts.iter().filter(|&&p| p == Part::Train).count() == s.train.len());
    }

    #[test]
    fn checkpoint_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
        let m = common::random_matrix(rows, cols, &mut SeedStream::new(seed).substream("ckpt"));
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[("w", &m)]).unwrap();
        let back = read_checkpoint(&buf[..]).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].1, &m);
    }
}

#[test]
fn gcn_forward_is_permutation_equivariant() {
    let g = Graph::from_pairs(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3)]).unwrap();
    let x = common::random_matrix(6, 4, &mut SeedStream::new(1).substream("x"));
    let model = GcnModel::new(
        4,
        3,
        &GcnConfig::default(),
        &mut SeedStream::new(1).substream("init"),
    );
    let perm = [3, 5, 0, 1, 4, 2];
    let pg = Graph::from_pairs(6, g.edges().map(|(u, v)| (perm[u], perm[v]))).unwrap();
    let mut px = DMatrix::zeros(6, 4);
    for u in 0..6 {
        px.set_row(perm[u], &x.row(u));
    }
    let (a, _) = model
        .predict(&Arc::new(gcn_propagation_matrix(&g)), &x)
        .unwrap();
    let (b, _) = model
        .predict(&Arc::new(gcn_propagation_matrix(&pg)), &px)
        .unwrap();
    for u in 0..6 {
        for c in 0..3 {
            assert!((a[(u, c)] - b[(perm[u], c)]).abs() < 1e-12);
        }
    }
}

#[test]
fn dataset_round_trip_through_files() {
    let d =
        trigon_core::data::synth_two_moons(&trigon_core::data::MoonsConfig::default(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    d.save_with_header(dir.path(), "# kind=moons\n").unwrap();
    let back: Dataset =
        load_dataset(dir.path(), &mut SeedStream::new(0).substream("split")).unwrap();
    assert_eq!(back.graph, d.graph);
    assert_eq!(back.labels, d.labels);
    assert_eq!(back.split, d.split);
    assert_eq!(back.features.matrix(), d.features.matrix());
}

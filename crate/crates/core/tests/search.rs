mod common;

use std::collections::HashSet;

use cellplan::cellgraph::{build_weighted_graph, compute_margins, query_overlay};
use cellplan::decomp::decompose;
use cellplan::grid::{generate_city_world, WorldSpec};
use cellplan::optimize::engine::ClarabelEngine;
use cellplan::search::{astar, astar_overlay, path_cost, yen_ksp, AdjacencyList, CellSequence, SearchGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

/// Exact remaining cost from every vertex, halved: admissible and consistent.
fn half_exact(adj: &[Vec<(usize, f64)>], dst: usize) -> Vec<f64> {
    (0..adj.len()).map(|v| dijkstra(adj, v, dst).map_or(0.0, |c| 0.5 * c)).collect()
}

fn collect_yen(g: &AdjacencyList, s: usize, t: usize, k: usize) -> (Vec<CellSequence>, bool) {
    let mut out = Vec::new();
    let outcome = yen_ksp(g, s, t, |_| 0.0, |p| out.push(p.clone()), |p| p.found >= k);
    (out, outcome.exhausted)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn astar_matches_dijkstra(seed in any::<u64>(), n in 2usize..40, p in 0.05f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (adj, edges) = random_graph(&mut rng, n, p);
        let g = AdjacencyList::from_edges(n, &edges);
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let want = dijkstra(&adj, s, t);
        let h = half_exact(&adj, t);
        for found in [astar(&g, s, t, |_| 0.0), astar(&g, s, t, |v| h[v])] {
            match (&found, want) {
                (None, None) => {}
                (Some(seq), Some(c)) => {
                    prop_assert!((seq.cost - c).abs() <= 1e-9);
                    prop_assert_eq!(seq.vertices.first(), Some(&s));
                    prop_assert_eq!(seq.vertices.last(), Some(&t));
                    prop_assert!((path_cost(&g, &seq.vertices).unwrap() - c).abs() <= 1e-9);
                }
                _ => prop_assert!(false, "astar {found:?} vs dijkstra {want:?}"),
            }
        }
    }
}

#[test]
fn yen_matches_enumeration_of_simple_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 30 {
        let n = 30;
        let (adj, edges) = random_graph(&mut rng, n, 0.09);
        let (s, t) = (0, n - 1);
        let Some(mut all) = simple_paths(&adj, s, t, 200_000) else { continue };
        if all.is_empty() {
            continue;
        }
        checked += 1;
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        let g = AdjacencyList::from_edges(n, &edges);
        let (seqs, exhausted) = collect_yen(&g, s, t, 10);
        assert_eq!(seqs.len(), all.len().min(10));
        if all.len() < 10 {
            assert!(exhausted);
        } else if all.len() > 10 {
            assert!(!exhausted);
        }
        let mut seen = HashSet::new();
        for (i, seq) in seqs.iter().enumerate() {
            assert!((seq.cost - all[i].1).abs() <= 1e-9, "rank {i}: {} vs {}", seq.cost, all[i].1);
            assert!(seen.insert(seq.vertices.clone()), "duplicate sequence");
            let distinct: HashSet<_> = seq.vertices.iter().collect();
            assert_eq!(distinct.len(), seq.vertices.len(), "loop in {:?}", seq.vertices);
            assert!((path_cost(&g, &seq.vertices).unwrap() - seq.cost).abs() <= 1e-9);
        }
    }
}

#[test]
fn yen_runs_to_exhaustion_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.gen_range(3..9);
        let (adj, edges) = random_graph(&mut rng, n, 0.5);
        let g = AdjacencyList::from_edges(n, &edges);
        let all = simple_paths(&adj, 0, n - 1, 100_000).unwrap();
        let mut out = Vec::new();
        let outcome = yen_ksp(&g, 0, n - 1, |_| 0.0, |p| out.push(p.clone()), |_| false);
        assert!(outcome.exhausted);
        assert_eq!(outcome.found, all.len());
        assert_eq!(out.len(), all.len());
        let got: HashSet<Vec<usize>> = out.iter().map(|s| s.vertices.clone()).collect();
        let want: HashSet<Vec<usize>> = all.into_iter().map(|p| p.0).collect();
        assert_eq!(got, want);
        assert!(out.windows(2).all(|w| w[0].cost <= w[1].cost + 1e-12));
    }
}

#[test]
fn diamond_and_single_route() {
    // 0 - 1 - 3 costs 2, 0 - 2 - 3 costs 3.
    let g = AdjacencyList::from_edges(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.5), (2, 3, 1.5)]);
    let (seqs, exhausted) = collect_yen(&g, 0, 3, 5);
    assert!(exhausted);
    let got: Vec<(Vec<usize>, f64)> = seqs.into_iter().map(|s| (s.vertices, s.cost)).collect();
    assert_eq!(got, vec![(vec![0, 1, 3], 2.0), (vec![0, 2, 3], 3.0)]);

    let line = AdjacencyList::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]);
    let (seqs, exhausted) = collect_yen(&line, 0, 2, 5);
    assert!(exhausted);
    assert_eq!(seqs.len(), 1);

    let split = AdjacencyList::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
    assert_eq!(astar(&split, 0, 3, |_| 0.0), None);
    let (seqs, exhausted) = collect_yen(&split, 0, 3, 5);
    assert!(seqs.is_empty() && exhausted);

    assert_eq!(
        astar(&split, 2, 2, |_| 0.0),
        Some(CellSequence {
            vertices: vec![2],
            cost: 0.0
        })
    );
}

/// The query overlay as a plain adjacency list.
fn materialize<G: SearchGraph>(g: &G) -> Vec<Vec<(usize, f64)>> {
    (0..g.vertex_count())
        .map(|v| {
            let mut out = Vec::new();
            g.neighbors(v, &mut out);
            out
        })
        .collect()
}

#[test]
fn overlay_search_on_city_worlds() {
    for seed in 0..4 {
        let g = generate_city_world(&WorldSpec::new(100, 60, 50, seed)).unwrap();
        let d = decompose(&g);
        let margins = compute_margins(&d, 1.0).unwrap();
        let graph = build_weighted_graph(&d, &g, &margins, &ClarabelEngine).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut done = 0;
        while done < 10 {
            let p = |rng: &mut ChaCha8Rng| [rng.gen_range(1.0..99.0), rng.gen_range(1.0..99.0), rng.gen_range(1.0..59.0)];
            let Ok(ov) = query_overlay(&graph, &d, &margins, p(&mut rng), p(&mut rng)) else { continue };
            done += 1;
            let adj = materialize(&ov);
            let want = dijkstra(&adj, ov.start_vertex, ov.goal_vertex);
            let got = astar_overlay(&ov);
            assert_eq!(got.is_some(), want.is_some());
            if let (Some(seq), Some(c)) = (got, want) {
                assert!((seq.cost - c).abs() <= 1e-9 * c.max(1.0), "{} vs {c}", seq.cost);
            }
        }
    }
}

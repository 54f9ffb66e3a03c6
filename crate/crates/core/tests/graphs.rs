use std::collections::HashMap;

use proptest::prelude::*;
use rcdyn::graphs::{ball, ball_out, is_lr_treelike, sample_cm, sample_simple_counted, HalfEdge, MultiGraph, RevealCursor};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[u64], expected: f64) -> f64 {
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

/// Matching of 6 half-edges as a sorted key.
fn matching_key(cursor: &RevealCursor) -> Vec<(usize, usize)> {
    let mut key: Vec<(usize, usize)> = cursor
        .revealed()
        .iter()
        .map(|e| {
            let x = e.a.vertex * 2 + e.a.slot;
            let y = e.b.vertex * 2 + e.b.slot;
            (x.min(y), x.max(y))
        })
        .collect();
    key.sort_unstable();
    key
}

#[test]
fn adaptive_revealing_gives_uniform_matchings() {
    // 3 vertices of degree 2: 5!! = 15 perfect matchings.
    let runs = 30_000u64;
    let mut counts: HashMap<Vec<(usize, usize)>, u64> = HashMap::new();
    for seed in 0..runs {
        let mut cursor = RevealCursor::new(3, 2, seed).unwrap();
        let mut target = HalfEdge::new(2, 1);
        while !cursor.is_complete() {
            let e = cursor.reveal_next(target).unwrap();
            let landed = if e.a == target { e.b } else { e.a };
            let sibling = HalfEdge::new(landed.vertex, 1 - landed.slot);
            target = if cursor.is_matched(sibling) {
                match cursor.next_canonical() {
                    Some(h) => h,
                    None => break,
                }
            } else {
                sibling
            };
        }
        *counts.entry(matching_key(&cursor)).or_default() += 1;
    }
    assert_eq!(counts.len(), 15);
    let cells: Vec<u64> = counts.values().copied().collect();
    let p = chi_square_p(&cells, runs as f64 / 15.0);
    assert!(p > 1e-3, "chi-square p = {p}");
}

#[test]
fn canonical_sampler_gives_uniform_matchings() {
    let runs = 30_000u64;
    let mut counts: HashMap<Vec<(usize, usize)>, u64> = HashMap::new();
    for seed in 0..runs {
        let g = sample_cm(3, 2, seed).unwrap();
        let mut key: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .map(|e| (e.a.vertex * 2 + e.a.slot, e.b.vertex * 2 + e.b.slot))
            .map(|(x, y)| (x.min(y), x.max(y)))
            .collect();
        key.sort_unstable();
        *counts.entry(key).or_default() += 1;
    }
    assert_eq!(counts.len(), 15);
    let cells: Vec<u64> = counts.values().copied().collect();
    assert!(chi_square_p(&cells, runs as f64 / 15.0) > 1e-3);
}

#[test]
fn simple_fraction_of_cubic_configuration_model() {
    let runs = 4000;
    let simple = (0..runs).filter(|&s| sample_cm(2000, 3, s).unwrap().is_simple()).count();
    let frac = simple as f64 / runs as f64;
    let limit = (-2.0f64).exp();
    assert!((frac - limit).abs() < 0.02, "fraction {frac} vs {limit}");
}

#[test]
fn rejection_sampler_attempt_count_is_geometric() {
    let attempts: Vec<usize> = (0..400).map(|s| sample_simple_counted(300, 3, s, 10_000).unwrap().1).collect();
    let mean = attempts.iter().sum::<usize>() as f64 / attempts.len() as f64;
    assert!((mean - 2f64.exp()).abs() < 1.5, "mean attempts {mean}");
}

#[test]
fn large_random_cubic_graph_is_locally_treelike() {
    let (g, _) = sample_simple_counted(4000, 3, 12, 1000).unwrap();
    assert!(is_lr_treelike(&g, 2, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn configuration_model_is_regular_and_round_trips(n in 1usize..40, delta in 1usize..5, seed in any::<u64>()) {
        prop_assume!((n * delta) % 2 == 0);
        let g = sample_cm(n, delta, seed).unwrap();
        prop_assert_eq!(g.num_edges(), n * delta / 2);
        prop_assert!((0..n).all(|v| g.degree(v) == delta));
        let back = MultiGraph::from_text(&g.to_text().unwrap()).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(sample_cm(n, delta, seed).unwrap(), g);
    }

    #[test]
    fn relabel_preserves_degrees_and_loops(n in 2usize..30, seed in any::<u64>(), shift in 0usize..30) {
        prop_assume!(n % 2 == 0);
        let g = sample_cm(n, 3, seed).unwrap();
        let perm: Vec<usize> = (0..n).map(|v| (v + shift) % n).collect();
        let h = g.relabel(&perm).unwrap();
        prop_assert_eq!(h.num_edges(), g.num_edges());
        prop_assert_eq!(h.has_self_loop(), g.has_self_loop());
        prop_assert_eq!(h.has_parallel_edges(), g.has_parallel_edges());
    }

    #[test]
    fn ball_out_is_contained_in_ball(seed in any::<u64>(), v in 0usize..60, r in 1usize..4) {
        let g = sample_cm(60, 3, seed).unwrap();
        let full = ball(&g, v, r);
        let excluded: Vec<usize> = g.neighbors(v).iter().take(1).map(|&(_, e)| e).collect();
        let out = ball_out(&g, v, r, &excluded);
        prop_assert!(out.vertices.iter().all(|w| full.contains(*w)));
        prop_assert!(out.edges.iter().all(|e| full.edges.contains(e)));
        prop_assert!(full.distance.iter().all(|(w, &d)| d <= r && out.distance.get(w).is_none_or(|&d2| d2 >= d)));
    }
}

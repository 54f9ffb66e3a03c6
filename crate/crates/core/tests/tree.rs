use proptest::prelude::*;
use rcdyn::exact::enumerate;
use rcdyn::tree::{
    build_complete_tree, build_dary_tree, decay_rate, hat_p, p_u, phi, regular_root_connectivity, TreeBoundary,
    TreeParams,
};

#[test]
fn uniqueness_thresholds_in_closed_form() {
    assert!((p_u(1.0, 3, 1e-9).unwrap() - 0.5).abs() < 1e-6);
    assert!((p_u(1.0, 4, 1e-9).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    assert!((p_u(2.0, 3, 1e-9).unwrap() - 2.0 / 3.0).abs() < 1e-6);
    for q in [1.0, 1.5, 2.0] {
        let pu = p_u(q, 3, 1e-10).unwrap();
        assert!((2.0 * hat_p(pu, q).unwrap() - 1.0).abs() < 1e-5, "q = {q}");
    }
}

#[test]
fn large_q_threshold_lies_below_the_linear_one() {
    for q in [3.0, 10.0] {
        let pu = p_u(q, 3, 1e-9).unwrap();
        for i in 1..=100 {
            let p = pu * i as f64 / 101.0;
            assert!(2.0 * hat_p(p, q).unwrap() < 1.0);
        }
    }
}

fn root_connection(tree: &rcdyn::tree::CompleteTree, p: f64, q: f64) -> f64 {
    let table = enumerate(&tree.graph, p, q, &tree.bc).unwrap();
    // Root joined to the wired leaves by open edges.
    table.expectation(|mask| {
        let omega = rcdyn::exact::mask_to_omega(mask, tree.graph.num_edges());
        let mut uf = rcdyn::unionfind::UnionFind::new(tree.graph.n());
        for (e, &s) in omega.iter().enumerate() {
            if s {
                let (a, b) = tree.graph.endpoints(e);
                uf.union(a, b);
            }
        }
        tree.leaves.iter().any(|&l| uf.same(l, 0)) as u8 as f64
    })
}

#[test]
fn recursion_matches_wired_tree_enumeration() {
    let params = TreeParams::new(0.5, 2.0, 3).unwrap();
    let dary = build_dary_tree(2, 2, TreeBoundary::Wired).unwrap();
    assert!((root_connection(&dary, 0.5, 2.0) - phi(2, &params)).abs() < 1e-10);
    let regular = build_complete_tree(3, 2, TreeBoundary::Wired).unwrap();
    assert!((root_connection(&regular, 0.5, 2.0) - regular_root_connectivity(2, &params)).abs() < 1e-10);
    let one = build_dary_tree(2, 1, TreeBoundary::Wired).unwrap();
    assert!((root_connection(&one, 0.5, 2.0) - phi(1, &params)).abs() < 1e-10);
}

#[test]
fn decay_rate_tends_to_d_hat_p() {
    let params = TreeParams::new(0.5, 2.0, 3).unwrap();
    let r = decay_rate(&params, 60);
    assert!((r / params.d_hat_p() - 1.0).abs() < 0.01);
    assert!((params.d_hat_p() - 2.0 / 3.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_is_increasing_and_bounded(p in 0.01f64..0.99, q in 1.0f64..10.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let params = TreeParams::new(p, q, 3).unwrap();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(params.f(lo) <= params.f(hi) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&params.f(hi)));
    }

    #[test]
    fn connectivity_decreases_with_height(p in 0.01f64..0.99, q in 1.0f64..10.0, h in 0usize..30) {
        let params = TreeParams::new(p, q, 3).unwrap();
        prop_assert!(phi(h + 1, &params) <= phi(h, &params) + 1e-15);
    }

    #[test]
    fn hat_p_is_below_p_for_q_above_one(p in 0.001f64..0.999, q in 1.0f64..50.0) {
        let h = hat_p(p, q).unwrap();
        prop_assert!(h <= p + 1e-15 && h > 0.0);
    }
}

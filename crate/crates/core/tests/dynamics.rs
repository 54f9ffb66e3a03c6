use proptest::prelude::*;
use rand::Rng;
use rcdyn::dynamics::{
    censored_localized_chain, dominated, grand_coupling_run, potts_from_rc, Chain, SwChain, UpdateStream,
};
use rcdyn::exact::{enumerate, mask_to_omega};
use rcdyn::graphs::{ball, named, sample_simple};
use rcdyn::rng::rng_from_seed;
use rcdyn::tree::hat_p;
use rcdyn::BoundaryCondition;

fn long_run_marginal(g: &rcdyn::MultiGraph, p: f64, q: f64, steps: u64, seed: u64) -> Vec<f64> {
    let mut chain = Chain::all_closed(g, p, q, &BoundaryCondition::free()).unwrap();
    let mut stream = UpdateStream::for_graph(g, seed).unwrap();
    chain.run(&mut stream, 1000);
    let mut counts = vec![0u64; g.num_edges()];
    chain.run_with_edge_counts(&mut stream, steps, &mut counts);
    counts.iter().map(|&c| c as f64 / steps as f64).collect()
}

#[test]
fn isolated_edge_in_a_tree_has_hat_p_marginal() {
    let g = named::path(2);
    for (p, q) in [(0.5, 2.0), (0.3, 1.5), (0.7, 5.0)] {
        let m = long_run_marginal(&g, p, q, 200_000, 1)[0];
        let want = hat_p(p, q).unwrap();
        let sd = (want * (1.0 - want) / 200_000.0).sqrt();
        assert!((m - want).abs() < (0.005f64).max(3.0 * sd), "p = {p}, q = {q}: {m} vs {want}");
    }
}

#[test]
fn triangle_marginal_matches_enumeration() {
    let g = named::triangle();
    let table = enumerate(&g, 0.5, 2.0, &BoundaryCondition::free()).unwrap();
    assert!((table.edge_marginal(0) - 5.0 / 14.0).abs() < 1e-12);
    let m = long_run_marginal(&g, 0.5, 2.0, 600_000, 2);
    let avg = m.iter().sum::<f64>() / 3.0;
    assert!((avg - 5.0 / 14.0).abs() < 0.01, "{avg}");
}

#[test]
fn multigraph_marginals_match_enumeration() {
    let g = named::double_edge_with_loop();
    let table = enumerate(&g, 0.4, 3.0, &BoundaryCondition::free()).unwrap();
    let m = long_run_marginal(&g, 0.4, 3.0, 800_000, 3);
    for (e, got) in m.iter().enumerate() {
        assert!((got - table.edge_marginal(e)).abs() < 0.01, "edge {e}: {got} vs {}", table.edge_marginal(e));
    }
}

#[test]
fn swendsen_wang_triangle_agreement() {
    let mut sw = SwChain::new(&named::triangle(), 0.5, 2.0, 4).unwrap();
    let steps = 200_000;
    let mut agree = 0u64;
    for _ in 0..steps {
        sw.step();
        let s = sw.spins();
        agree += (s[0] == s[1]) as u64;
    }
    let f = agree as f64 / steps as f64;
    assert!((f - 5.0 / 7.0).abs() < 0.01, "{f}");
}

#[test]
fn edwards_sokal_spins_match_exact_agreement() {
    for (g, p, q) in [(named::triangle(), 0.5, 2.0), (named::k4_minus_edge(), 0.6, 3.0)] {
        let table = enumerate(&g, p, q, &BoundaryCondition::free()).unwrap();
        let mut rng = rng_from_seed(5);
        let samples = 100_000;
        let m = g.num_edges();
        let cdf: Vec<f64> = table
            .probs()
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        let mut agree = 0u64;
        for _ in 0..samples {
            let u: f64 = rng.gen();
            let mask = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
            let spins = potts_from_rc(&g, &mask_to_omega(mask, m), q, &mut rng).unwrap();
            agree += (spins[0] == spins[1]) as u64;
        }
        let conn = table.connection_probability(&g, 0, 1);
        let want = conn + (1.0 - conn) / q;
        let got = agree as f64 / samples as f64;
        assert!((got - want).abs() < 0.006, "{got} vs {want}");
    }
}

#[test]
fn monotone_coupling_preserves_order_on_random_graph() {
    let g = sample_simple(64, 3, 9, 1000).unwrap();
    let m = g.num_edges();
    let inits = vec![vec![true; m], vec![false; m]];
    for seed in 0..10 {
        let out = grand_coupling_run(&g, 0.5, 2.0, &BoundaryCondition::free(), &inits, 2_000_000, seed).unwrap();
        assert_eq!(out.order_violations, 0);
        assert!(out.coupling_time.is_some());
        assert_eq!(out.finals[0], out.finals[1]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coupling_never_breaks_order(seed in any::<u64>(), p in 0.05f64..0.95, q in 1.0f64..6.0, bits in any::<u64>()) {
        let g = sample_simple(16, 3, seed, 10_000).unwrap();
        let m = g.num_edges();
        let mid: Vec<bool> = (0..m).map(|e| bits >> (e % 64) & 1 == 1).collect();
        let inits = vec![vec![true; m], mid, vec![false; m]];
        let out = grand_coupling_run(&g, p, q, &BoundaryCondition::free(), &inits, 5_000, seed).unwrap();
        prop_assert_eq!(out.order_violations, 0);
        prop_assert!(dominated(&out.finals[1], &out.finals[0]));
        prop_assert!(dominated(&out.finals[2], &out.finals[1]));
    }

    #[test]
    fn censored_chain_dominates_full_chain(seed in any::<u64>(), v in 0usize..40, r in 1usize..4, t in 0u64..4000) {
        let g = sample_simple(40, 3, seed, 10_000).unwrap();
        let a = ball(&g, v, r).edges;
        let mut s1 = UpdateStream::for_graph(&g, seed ^ 1).unwrap();
        let local = censored_localized_chain(&g, &a, 0.5, 2.0, &mut s1, t).unwrap();
        let mut full = Chain::all_open(&g, 0.5, 2.0, &BoundaryCondition::free()).unwrap();
        let mut s2 = UpdateStream::for_graph(&g, seed ^ 1).unwrap();
        full.run(&mut s2, t);
        for (i, &e) in a.iter().enumerate() {
            prop_assert!(!full.is_open(e) || local[i]);
        }
    }

    #[test]
    fn chain_state_is_a_valid_configuration(seed in any::<u64>(), steps in 0u64..3000) {
        let g = sample_simple(20, 3, seed, 10_000).unwrap();
        let mut c = Chain::all_open(&g, 0.3, 2.5, &BoundaryCondition::wired(&[0, 5, 9])).unwrap();
        let mut s = UpdateStream::for_graph(&g, seed).unwrap();
        c.run(&mut s, steps);
        prop_assert_eq!(c.t(), steps);
        prop_assert_eq!(c.open_count(), c.omega().iter().filter(|&&b| b).count());
    }
}

use rcdyn::graphs::sample_simple;
use rcdyn::rng::rng_from_seed;
use rcdyn::shattering::{
    branching_run, chernoff_bound, cluster_tail, containment_audit, default_tmix_tree, exact_progeny_law,
    joint_reveal, log_linear_fit, progeny_law, t_burn, update_count_threshold, BranchingConfig, ProgenyLaw,
};
use rcdyn::tree::tree_edge_count;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

/// Chi-square statistic over bins `0..=last` (the last pooling the upper
/// tail), with expected counts accumulated per observation.
struct BinnedChiSquare {
    observed: Vec<f64>,
    expected: Vec<f64>,
}

impl BinnedChiSquare {
    fn new(last: usize) -> Self {
        BinnedChiSquare { observed: vec![0.0; last + 1], expected: vec![0.0; last + 1] }
    }

    fn add(&mut self, value: u64, law: &Binomial) {
        let last = self.observed.len() - 1;
        self.observed[(value as usize).min(last)] += 1.0;
        let mut below = 0.0;
        for k in 0..last {
            let pk = law.pmf(k as u64);
            self.expected[k] += pk;
            below += pk;
        }
        self.expected[last] += (1.0 - below).max(0.0);
    }

    fn p_value(&self) -> f64 {
        let cells: Vec<(f64, f64)> =
            self.observed.iter().zip(&self.expected).filter(|(_, &e)| e > 5.0).map(|(&o, &e)| (o, e)).collect();
        let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        1.0 - ChiSquared::new((cells.len() - 1) as f64).unwrap().cdf(stat)
    }
}

#[test]
fn per_ball_update_counts_follow_sequential_binomial_laws() {
    let (n, delta, t) = (8usize, 3usize, 20u64);
    let h = (n * delta) as f64;
    let mut first = BinnedChiSquare::new(10);
    let mut second = BinnedChiSquare::new(8);
    let mut second_seen = 0;
    for seed in 0..10_000u64 {
        let out = joint_reveal(n, delta, 0.5, 2.0, &[], &[0], 1, t, seed).unwrap();
        let s1 = &out.trace[0];
        let a = s1.new_edges as f64;
        first.add(s1.kappa, &Binomial::new(2.0 * a / h, t).unwrap());
        if let Some(s2) = out.trace.get(1).filter(|s| s.new_edges > 0) {
            let b = s2.new_edges as f64;
            let law = Binomial::new(2.0 * b / (h - 2.0 * a), t - s1.kappa).unwrap();
            second.add(s2.kappa, &law);
            second_seen += 1;
        }
    }
    assert!(first.p_value() > 1e-3, "first ball p = {}", first.p_value());
    assert!(second_seen > 1000, "only {second_seen} second balls");
    assert!(second.p_value() > 1e-3, "second ball p = {}", second.p_value());
}

#[test]
fn large_update_counts_are_rarer_than_chernoff_bound() {
    let (n, delta, r, t) = (64usize, 3usize, 2usize, 200u64);
    let runs = 2000;
    let threshold = update_count_threshold(t, r, delta, n);
    let mu = 2.0 * tree_edge_count(delta, r) as f64 * t as f64 / (delta * n) as f64;
    let per_ball = chernoff_bound(t, mu / t as f64, threshold);
    let mut exceeded = 0;
    let mut balls = 0usize;
    for seed in 0..runs {
        let out = joint_reveal(n, delta, 0.5, 2.0, &[], &[3], r, t, seed).unwrap();
        balls += out.trace.len();
        exceeded += out.trace.iter().any(|s| s.kappa as f64 > threshold) as usize;
    }
    let bound = (balls as f64 / runs as f64) * per_ball;
    let freq = exceeded as f64 / runs as f64;
    assert!(freq <= bound + 3.0 * (bound / runs as f64).sqrt() + 1.0 / runs as f64, "{freq} vs {bound}");
}

#[test]
fn revealed_cluster_contains_full_chain_cluster_at_burn_in() {
    let (n, delta, r) = (1024usize, 3usize, 3usize);
    let t = t_burn(1.0, r, n, delta, default_tmix_tree(delta, r)).unwrap();
    for seed in 0..8u64 {
        let out = joint_reveal(n, delta, 0.5, 2.0, &[], &[(seed as usize * 97) % n], r, t, seed).unwrap();
        let audit = containment_audit(&out, 0.5, 2.0).unwrap();
        assert!(audit.holds(), "seed {seed}: {audit:?}");
        let explored = out.explored_vertices();
        assert!(audit.revealed_cluster.iter().all(|v| out.v0.contains(v) || explored.contains(v)));
    }
}

#[test]
fn frontier_vertices_never_repeat() {
    for seed in 0..50 {
        let out = joint_reveal(200, 3, 0.6, 2.0, &[], &[0, 1, 2], 2, 2000, seed).unwrap();
        let mut all: Vec<usize> = out.generations.iter().flatten().copied().collect();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), len);
        assert_eq!(out.k_empty, out.generations.len());
        for w in out.generations.iter() {
            assert!(w.windows(2).all(|p| p[0] < p[1]));
        }
    }
}

#[test]
fn galton_watson_total_population_mean() {
    let law = ProgenyLaw::from_pmf(vec![0.49, 0.42, 0.09]).unwrap();
    let m = law.mean();
    let cfg = BranchingConfig::new(3, None, 2, 3).unwrap();
    let runs = 20_000;
    let mut total = 0.0;
    for seed in 0..runs {
        let out = branching_run(&cfg, |rng| law.sample(rng), seed, 1_000_000).unwrap();
        assert!(!out.hit_cap);
        total += out.total as f64;
    }
    let mean = total / runs as f64;
    let want = 3.0 / (1.0 - m);
    let sd = (3.0 * 0.42 / (1.0 - m).powi(3) / runs as f64).sqrt();
    assert!((mean - want).abs() < 4.0 * sd, "{mean} vs {want}");
}

#[test]
fn subcritical_process_dies_with_exponential_tail() {
    let law = ProgenyLaw::from_pmf(vec![0.5, 0.3, 0.2]).unwrap();
    let cfg = BranchingConfig::new(1, Some(1_000_000_000_000), 2, 3).unwrap();
    let runs = 10_000;
    let mut totals = Vec::with_capacity(runs);
    let mut extinct = 0;
    for seed in 0..runs as u64 {
        let out = branching_run(&cfg, |rng| law.sample(rng), seed, 1_000_000).unwrap();
        extinct += (!out.hit_cap) as usize;
        totals.push(out.total);
    }
    assert!(extinct as f64 >= 0.99 * runs as f64);
    let tail: Vec<f64> = (0..40).map(|k| totals.iter().filter(|&&x| x >= k).count() as f64 / runs as f64).collect();
    let fit = log_linear_fit(&tail, 2, 20).unwrap();
    assert!(fit.slope < 0.0 && fit.r2 > 0.9, "{fit:?}");
}

#[test]
fn bad_individuals_explode_to_cap() {
    let cfg = BranchingConfig { z0: 2, bad_prob: 1.0, tree_vertices: 22 };
    for seed in 0..5 {
        let out = branching_run(&cfg, |_| 0, seed, 10_000).unwrap();
        assert!(out.hit_cap);
    }
}

#[test]
fn progeny_mean_decreases_with_radius() {
    let m1 = exact_progeny_law(1, 0.5, 2.0, 3).unwrap().mean();
    let m2 = exact_progeny_law(2, 0.5, 2.0, 3).unwrap().mean();
    let m3 = progeny_law(3, 0.5, 2.0, 3, 400, 11, None).unwrap().mean();
    assert!((m1 - 1.5).abs() < 1e-12);
    assert!(m2 < m1 && m3 < m2, "{m1} {m2} {m3}");
}

#[test]
fn progeny_vanishes_as_p_goes_to_zero() {
    let law = exact_progeny_law(2, 1e-9, 2.0, 3).unwrap();
    assert!(law.pmf()[0] > 1.0 - 1e-6);
    let mut rng = rng_from_seed(1);
    assert!((0..100).all(|_| law.sample(&mut rng) == 0));
}

#[test]
fn cluster_tail_trivial_limits() {
    let g = sample_simple(60, 3, 2, 1000).unwrap();
    let at_zero = cluster_tail(&g, 0.5, 2.0, 0, 2, 1).unwrap();
    assert!(at_zero.max_cluster.iter().all(|&c| c == 60));
    assert_eq!(at_zero.tail[60], 1.0);
    let closed = cluster_tail(&g, 1e-12, 2.0, 20_000, 3, 1).unwrap();
    assert_eq!(closed.tail[2], 0.0);
}

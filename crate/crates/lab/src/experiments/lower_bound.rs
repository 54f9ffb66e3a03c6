use rayon::prelude::*;
use rcdyn::dynamics::{Chain, UpdateStream};
use rcdyn::graphs::{ball, tree_excess, MultiGraph};
use rcdyn::rng::{derive_seed, role};
use rcdyn::tree::hat_p;
use rcdyn::BoundaryCondition;

use super::{n_ln_n, regular_graph, require_monotone};
use crate::config::ExperimentConfig;
use crate::report::{Report, RowKey};
use crate::{LabError, LabResult};

/// Greedily picks up to `target` centers, in vertex order, whose radius-`r`
/// balls are trees and pairwise vertex-disjoint.
pub fn disjoint_tree_balls(g: &MultiGraph, r: usize, target: usize) -> Vec<usize> {
    let mut used = vec![false; g.n()];
    let mut centers = Vec::new();
    for v in 0..g.n() {
        if centers.len() == target {
            break;
        }
        let b = ball(g, v, r);
        if tree_excess(g, &b) != 0 || b.vertices.iter().any(|&w| used[w]) {
            continue;
        }
        for &w in &b.vertices {
            used[w] = true;
        }
        centers.push(v);
    }
    centers
}

/// The first edge at each center.
pub fn representative_edges(g: &MultiGraph, centers: &[usize]) -> Vec<usize> {
    centers.iter().map(|&v| g.neighbors(v)[0].1).collect()
}

/// `⌊(1/5) log_d n⌋` with `d = Δ − 1`.
pub fn ball_radius(n: usize, delta: usize) -> usize {
    ((n as f64).ln() / ((delta - 1) as f64).ln() / 5.0 + 1e-12).floor() as usize
}

/// `p̂ n^ε − n^{2ε/3}`.
pub fn a_plus_threshold(n: usize, eps: f64, hp: f64) -> f64 {
    let nf = n as f64;
    hp * nf.powf(eps) - nf.powf(2.0 * eps / 3.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundRep {
    pub edges: usize,
    pub eps: f64,
    pub threshold: f64,
    pub open_at_t: usize,
    pub a_plus_at_t: bool,
    pub never_updated: usize,
    pub stationary_freq: f64,
    pub stationary_open_mean: f64,
}

#[derive(Clone, Copy, Debug)]
struct Plan {
    n: usize,
    delta: usize,
    p: f64,
    q: f64,
    eps: f64,
    radius: usize,
    t: u64,
    ref_burn: u64,
    ref_samples: usize,
    ref_spacing: u64,
}

fn one_rep(plan: &Plan, seed: u64) -> LabResult<LowerBoundRep> {
    let g = regular_graph(plan.n, plan.delta, seed)?;
    let target = (plan.n as f64).powf(plan.eps).floor() as usize;
    let centers = disjoint_tree_balls(&g, plan.radius, target);
    if centers.is_empty() {
        return Err(LabError::Parameter("no tree ball of the required radius".into()));
    }
    let eps = if centers.len() < target { (centers.len() as f64).ln() / (plan.n as f64).ln() } else { plan.eps };
    let c_edges = representative_edges(&g, &centers);
    let threshold = a_plus_threshold(plan.n, eps, hat_p(plan.p, plan.q)?);
    let mut chain = Chain::all_closed(&g, plan.p, plan.q, &BoundaryCondition::free())?;
    let mut stream = UpdateStream::for_graph(&g, derive_seed(seed, role::UPDATES))?;
    let mut updated = vec![false; g.num_edges()];
    for _ in 0..plan.t {
        if let Some((e, _)) = chain.apply(stream.next_update()) {
            updated[e] = true;
        }
    }
    let open = |c: &Chain| c_edges.iter().filter(|&&e| c.is_open(e)).count();
    let open_at_t = open(&chain);
    let never_updated = c_edges.iter().filter(|&&e| !updated[e]).count();
    chain.run(&mut stream, plan.ref_burn.saturating_sub(plan.t));
    let mut hits = 0usize;
    let mut open_sum = 0usize;
    for _ in 0..plan.ref_samples {
        chain.run(&mut stream, plan.ref_spacing);
        let k = open(&chain);
        open_sum += k;
        hits += (k as f64 >= threshold) as usize;
    }
    Ok(LowerBoundRep {
        edges: c_edges.len(),
        eps,
        threshold,
        open_at_t,
        a_plus_at_t: open_at_t as f64 >= threshold,
        never_updated,
        stationary_freq: hits as f64 / plan.ref_samples.max(1) as f64,
        stationary_open_mean: open_sum as f64 / (plan.ref_samples.max(1) * c_edges.len()) as f64,
    })
}

/// Coupon-collector statistic on representative edges of disjoint tree
/// balls: the free-start chain at `T = c²·n·ln(n^ε)` against a long
/// reference run of the same chain.
///
/// Keys: `eps` (default 0.3), `c` (default 0.5), `ref_burn` (reference
/// burn-in in units of `n ln n`, default 20), `ref_samples` (default 200)
/// and `ref_spacing` (updates between reference samples, default `n`).
/// Each rep draws its own graph and stream from `derive_seed(seed, rep)`.
pub fn lower_bound(cfg: &ExperimentConfig) -> LabResult<Report> {
    require_monotone(cfg.q)?;
    let rp = cfg.resolve_p()?;
    let n = cfg.single_size()?;
    let delta = cfg.delta;
    if delta < 3 {
        return Err(LabError::Parameter("delta must be at least 3".into()));
    }
    let eps: f64 = cfg.extra_or("eps", 0.3)?;
    let c: f64 = cfg.extra_or("c", 0.5)?;
    if !(eps > 0.0 && eps < 1.0) || c <= 0.0 {
        return Err(LabError::Parameter(format!("need 0 < eps < 1 and c > 0 (eps = {eps}, c = {c})")));
    }
    if (n as f64).powf(eps) < 8.0 {
        return Err(LabError::Parameter(format!("n^eps = {:.2} < 8 representative edges", (n as f64).powf(eps))));
    }
    let plan = Plan {
        n,
        delta,
        p: rp.p,
        q: cfg.q,
        eps,
        radius: ball_radius(n, delta),
        t: (c * c * n as f64 * eps * (n as f64).ln()).ceil() as u64,
        ref_burn: (cfg.extra_or("ref_burn", 20.0)? * n_ln_n(n)).ceil() as u64,
        ref_samples: cfg.extra_or("ref_samples", 200)?,
        ref_spacing: cfg.extra_or("ref_spacing", n as u64)?,
    };
    let reps = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| one_rep(&plan, derive_seed(cfg.seed, i)))
        .collect::<LabResult<Vec<_>>>()?;
    let hp = hat_p(plan.p, plan.q)?;
    let mut report = Report::new(cfg);
    report.resolve("p", plan.p);
    report.resolve("hat_p", hp);
    report.resolve("radius", plan.radius as f64);
    report.resolve("T", plan.t as f64);
    report.resolve("threshold", a_plus_threshold(n, eps, hp));
    let key = RowKey { experiment: "lower-bound", n, delta, q: plan.q, p: plan.p, seed: cfg.seed };
    for (i, r) in reps.iter().enumerate() {
        report.rows.push(key.row(Some(i), "c_edges", r.edges as f64));
        report.rows.push(key.row(Some(i), "open_at_t", r.open_at_t as f64));
        report.rows.push(key.row(Some(i), "a_plus_at_t", r.a_plus_at_t as u8 as f64));
        report.rows.push(key.row(Some(i), "never_updated", r.never_updated as f64));
        report.rows.push(key.row(Some(i), "stationary_a_plus_freq", r.stationary_freq));
        report.rows.push(key.row(Some(i), "stationary_open_mean", r.stationary_open_mean));
        if r.eps < eps {
            report.flag(format!("rep {i}: only {} disjoint tree balls, eps reduced to {:.4}", r.edges, r.eps));
        }
    }
    let k = reps.len().max(1) as f64;
    let freq_t = reps.iter().filter(|r| r.a_plus_at_t).count() as f64 / k;
    let freq_s = reps.iter().map(|r| r.stationary_freq).sum::<f64>() / k;
    let m = (n * delta / 2) as f64;
    let expected_never =
        reps.iter().map(|r| r.edges as f64 * (1.0 - 1.0 / m).powf(plan.t as f64)).sum::<f64>() / k;
    report.summarize("a_plus_freq_at_t", freq_t);
    report.summarize("a_plus_freq_stationary", freq_s);
    report.summarize("never_updated_mean", reps.iter().map(|r| r.never_updated as f64).sum::<f64>() / k);
    report.summarize("never_updated_expected", expected_never);
    report.summarize("c_edges_mean", reps.iter().map(|r| r.edges as f64).sum::<f64>() / k);
    report.summarize("stationary_open_mean", reps.iter().map(|r| r.stationary_open_mean).sum::<f64>() / k);
    report.summarize("success", (freq_t <= 0.25 && freq_s >= 0.75) as u8 as f64);
    if a_plus_threshold(n, eps, hp) <= 0.0 {
        report.flag(format!(
            "A+ threshold {:.3} is not positive at n = {n}, eps = {eps}: A+ holds for every configuration",
            a_plus_threshold(n, eps, hp)
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_and_threshold() {
        assert_eq!(ball_radius(4096, 3), 2);
        assert_eq!(ball_radius(1 << 20, 3), 4);
        assert!(a_plus_threshold(4096, 0.3, 1.0 / 3.0) < 0.0);
        assert!(a_plus_threshold(60_000, 0.3, 1.0 / 3.0) > 0.0);
    }

    #[test]
    fn balls_are_disjoint_trees() {
        let g = regular_graph(512, 3, 4).unwrap();
        let centers = disjoint_tree_balls(&g, 2, 20);
        assert_eq!(centers.len(), 20);
        let mut seen = std::collections::HashSet::new();
        for &v in &centers {
            let b = ball(&g, v, 2);
            assert_eq!(tree_excess(&g, &b), 0);
            assert!(b.vertices.iter().all(|w| seen.insert(*w)));
        }
    }
}

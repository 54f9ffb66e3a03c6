use rayon::prelude::*;
use rcdyn::dynamics::{Chain, UpdateStream};
use rcdyn::exact::{enumerate, tv_distance, ExactTable};
use rcdyn::rng::derive_seed;
use rcdyn::tree::{build_complete_tree, hat_p, CompleteTree, TreeBoundary};
use rcdyn::BoundaryCondition;

use super::{estimate_from_batches, Estimate};
use crate::config::ExperimentConfig;
use crate::report::{Report, RowKey};
use crate::stats::linear_fit;
use crate::{LabError, LabResult};

/// The `Δ`-regular tree `T_R` with the two-leaf boundary condition: the
/// first leaf and the last leaf, which sit in distinct root subtrees, wired
/// together.
#[derive(Clone, Debug)]
pub struct TwoLeafTree {
    pub tree: CompleteTree,
    pub xi: BoundaryCondition,
    pub leaves: (usize, usize),
    /// Edges of the leaf-to-leaf path, root edges excluded.
    pub upsilon_edges: Vec<usize>,
}

impl TwoLeafTree {
    pub fn new(delta: usize, r: usize) -> LabResult<Self> {
        let tree = build_complete_tree(delta, r, TreeBoundary::Free)?;
        let w1 = tree.leaves[0];
        let w2 = *tree.leaves.last().expect("a tree has leaves");
        let mut upsilon_edges: Vec<usize> =
            tree.path_edges(w1).into_iter().skip(1).chain(tree.path_edges(w2).into_iter().skip(1)).collect();
        upsilon_edges.sort_unstable();
        Ok(TwoLeafTree { xi: BoundaryCondition::wired(&[w1, w2]), leaves: (w1, w2), upsilon_edges, tree })
    }

    pub fn root_edges(&self) -> Vec<usize> {
        self.tree.root_edges()
    }

    fn upsilon_mask(&self) -> usize {
        self.upsilon_edges.iter().fold(0, |m, &e| m | 1 << e)
    }
}

/// Exact `TV(N_root)` between `ξ` and free, and `π^ξ(Υ)`, by enumeration.
pub fn exact_tree_tv(t: &TwoLeafTree, xi: &BoundaryCondition, p: f64, q: f64) -> LabResult<(f64, f64)> {
    let a: ExactTable = enumerate(&t.tree.graph, p, q, xi)?;
    let b = enumerate(&t.tree.graph, p, q, &BoundaryCondition::free())?;
    let tv = tv_distance(&a, &b, &t.root_edges())?;
    let mask = t.upsilon_mask();
    Ok((tv, a.expectation(|w| (w & mask == mask) as u8 as f64)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedTv {
    pub tv: Estimate,
    /// `π^ξ(Υ)` from the `ξ` chain.
    pub upsilon: Estimate,
    /// TV estimate of each independent chain pair.
    pub per_chain: Vec<f64>,
}

struct PairRun {
    /// Per batch, the summed `1_c(ξ) − 1_c(free)` for every root configuration `c`.
    diffs: Vec<Vec<i64>>,
    upsilon: Vec<f64>,
}

fn root_index(chain: &Chain, roots: usize) -> usize {
    (0..roots).fold(0, |acc, e| acc | (chain.is_open(e) as usize) << e)
}

fn run_pair(
    t: &TwoLeafTree,
    xi: &BoundaryCondition,
    p: f64,
    q: f64,
    burn: u64,
    batches: usize,
    batch_len: u64,
    seed: u64,
) -> LabResult<PairRun> {
    let g = &t.tree.graph;
    let m = g.num_edges();
    let roots = t.tree.root_children;
    let mut wired = Chain::new(g, p, q, xi, &vec![false; m])?;
    let mut free = Chain::new(g, p, q, &BoundaryCondition::free(), &vec![false; m])?;
    let mut stream = UpdateStream::for_graph(g, seed)?;
    for _ in 0..burn {
        let u = stream.next_update();
        wired.apply(u);
        free.apply(u);
    }
    let mut in_upsilon = vec![false; m];
    for &e in &t.upsilon_edges {
        in_upsilon[e] = true;
    }
    let mut ups_open = t.upsilon_edges.iter().filter(|&&e| wired.is_open(e)).count();
    let ups_len = t.upsilon_edges.len();
    let (mut cw, mut cf) = (root_index(&wired, roots), root_index(&free, roots));
    let mut diffs = Vec::with_capacity(batches);
    let mut upsilon = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut d = vec![0i64; 1 << roots];
        let mut hits = 0u64;
        for _ in 0..batch_len {
            let u = stream.next_update();
            let e = g.edge_of_half_edge(u.half_edge);
            let before = wired.is_open(e);
            if let Some((e, s)) = wired.apply(u) {
                if e < roots {
                    cw = cw & !(1 << e) | (s as usize) << e;
                }
                if in_upsilon[e] && s != before {
                    if s {
                        ups_open += 1;
                    } else {
                        ups_open -= 1;
                    }
                }
            }
            if let Some((e, s)) = free.apply(u) {
                if e < roots {
                    cf = cf & !(1 << e) | (s as usize) << e;
                }
            }
            if cw != cf {
                d[cw] += 1;
                d[cf] -= 1;
            }
            hits += (ups_open == ups_len) as u64;
        }
        diffs.push(d);
        upsilon.push(hits as f64 / batch_len as f64);
    }
    Ok(PairRun { diffs, upsilon })
}

/// Paired estimate of `TV(N_root)` between `ξ` and free.
///
/// Each of `chains` independent pairs runs a `ξ` chain and a free chain
/// from the same all-closed state on one shared update stream, so the `ξ`
/// chain stays above the free one. After `burn` updates, the difference
/// `π^ξ(c) − π(c)` of every root configuration `c` is estimated by the
/// time average of `1_c(ξ_t) − 1_c(free_t)`, and
/// `TV = ½ Σ_c s_c (π^ξ(c) − π(c))` with `s_c` the sign of the pooled
/// estimate. The standard error comes from batch means of the same linear
/// combination.
#[allow(clippy::too_many_arguments)]
pub fn paired_tree_tv(
    t: &TwoLeafTree,
    xi: &BoundaryCondition,
    p: f64,
    q: f64,
    steps: u64,
    burn: u64,
    chains: usize,
    batches: usize,
    seed: u64,
) -> LabResult<PairedTv> {
    if chains == 0 || batches < 2 || steps < batches as u64 {
        return Err(LabError::Parameter("need at least one chain, two batches and one step per batch".into()));
    }
    let batch_len = steps / batches as u64;
    let runs = (0..chains as u64)
        .into_par_iter()
        .map(|c| run_pair(t, xi, p, q, burn, batches, batch_len, derive_seed(seed, c)))
        .collect::<LabResult<Vec<_>>>()?;
    let configs = 1usize << t.tree.root_children;
    let mut total = vec![0i64; configs];
    for run in &runs {
        for d in &run.diffs {
            for (acc, x) in total.iter_mut().zip(d) {
                *acc += x;
            }
        }
    }
    let sign: Vec<f64> = total.iter().map(|&x| x.signum() as f64).collect();
    let combine = |d: &[i64]| 0.5 * d.iter().zip(&sign).map(|(&x, s)| x as f64 * s).sum::<f64>() / batch_len as f64;
    let per_chain: Vec<f64> =
        runs.iter().map(|r| r.diffs.iter().map(|d| combine(d)).sum::<f64>() / batches as f64).collect();
    let tv_batches: Vec<f64> = runs.iter().flat_map(|r| r.diffs.iter().map(|d| combine(d))).collect();
    let ups_batches: Vec<f64> = runs.iter().flat_map(|r| r.upsilon.iter().copied()).collect();
    Ok(PairedTv { tv: estimate_from_batches(&tv_batches), upsilon: estimate_from_batches(&ups_batches), per_chain })
}

/// Decay of `TV(N_root)` with depth.
///
/// Keys: `radii` (default `2, 3, 4, 5`), `exact_max` (largest depth done by
/// enumeration, default 3), `mcmc_from` (smallest depth done by MCMC,
/// default 3), `mcmc_steps` (steps per pair at depth `mcmc_from`, default
/// 2·10⁷, multiplied by `mcmc_growth` per extra level, default 3),
/// `burn_sweeps` (default 1000), `chains` (default 2), `batches` (default
/// 100) and `xi` (`two-leaf` or `free`).
pub fn spatial_mixing(cfg: &ExperimentConfig) -> LabResult<Report> {
    let rp = cfg.resolve_p()?;
    let (p, q, delta) = (rp.p, cfg.q, cfg.delta);
    let radii: Vec<usize> = cfg.extra_list("radii")?.unwrap_or_else(|| vec![2, 3, 4, 5]);
    let exact_max: usize = cfg.extra_or("exact_max", 3)?;
    let mcmc_from: usize = cfg.extra_or("mcmc_from", 3)?;
    let base_steps: f64 = cfg.extra_or("mcmc_steps", 2e7)?;
    let growth: f64 = cfg.extra_or("mcmc_growth", 3.0)?;
    let burn_sweeps: u64 = cfg.extra_or("burn_sweeps", 1000)?;
    let chains: usize = cfg.extra_or("chains", 2)?;
    let batches: usize = cfg.extra_or("batches", 100)?;
    let two_leaf = match cfg.extra.get("xi").map(String::as_str).unwrap_or("two-leaf") {
        "two-leaf" => true,
        "free" => false,
        other => return Err(LabError::Parameter(format!("unknown xi {other:?}"))),
    };
    if radii.is_empty() || radii.contains(&0) {
        return Err(LabError::Parameter("radii must be positive".into()));
    }
    let hp = hat_p(p, q)?;
    let mut report = Report::new(cfg);
    report.resolve("p", p);
    report.resolve("hat_p", hp);
    let target = 2.0 * (1.0 / hp).ln();
    report.resolve("target_rate", target);
    let mut points = Vec::new();
    for &r in &radii {
        let t = TwoLeafTree::new(delta, r)?;
        let xi = if two_leaf { t.xi.clone() } else { BoundaryCondition::free() };
        let m = t.tree.graph.num_edges();
        let key = RowKey { experiment: "spatial-mixing", n: t.tree.graph.n(), delta, q, p, seed: cfg.seed };
        let mut best = None;
        if r <= exact_max {
            let (tv, ups) = exact_tree_tv(&t, &xi, p, q)?;
            report.rows.push(key.row(None, "tv_exact", tv));
            report.rows.push(key.row(None, "upsilon_exact", ups));
            report.summarize(&format!("tv_exact_r{r}"), tv);
            report.summarize(&format!("upsilon_exact_r{r}"), ups);
            best = Some(tv);
        }
        if r >= mcmc_from {
            let steps = (base_steps * growth.powi((r - mcmc_from) as i32)).round() as u64;
            let burn = burn_sweeps * m as u64;
            let est = paired_tree_tv(&t, &xi, p, q, steps, burn, chains, batches, derive_seed(cfg.seed, r as u64))?;
            report.resolve(&format!("mcmc_steps_r{r}"), steps as f64);
            for (c, v) in est.per_chain.iter().enumerate() {
                report.rows.push(key.row(Some(c), "tv_mcmc_chain", *v));
            }
            report.rows.push(key.row(None, "tv_mcmc", est.tv.mean));
            report.rows.push(key.row(None, "tv_mcmc_se", est.tv.se));
            report.rows.push(key.row(None, "upsilon_mcmc", est.upsilon.mean));
            report.rows.push(key.row(None, "upsilon_mcmc_se", est.upsilon.se));
            report.summarize(&format!("tv_mcmc_r{r}"), est.tv.mean);
            report.summarize(&format!("tv_mcmc_se_r{r}"), est.tv.se);
            report.summarize(&format!("upsilon_mcmc_r{r}"), est.upsilon.mean);
            if est.per_chain.len() >= 2 && est.tv.se > 0.0 {
                let spread = est.per_chain.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - est.per_chain.iter().copied().fold(f64::INFINITY, f64::min);
                let pair_se = est.tv.se * (2.0 * est.per_chain.len() as f64).sqrt();
                if spread > 4.0 * pair_se {
                    report.flag(format!("R = {r}: independent chains disagree ({spread:.3e} > 4 × {pair_se:.3e})"));
                }
            }
            if let Some(exact) = best {
                let z = (exact - est.tv.mean).abs() / est.tv.se;
                report.summarize(&format!("overlap_z_r{r}"), if exact == est.tv.mean { 0.0 } else { z });
            } else {
                best = Some(est.tv.mean);
            }
        }
        if let Some(tv) = best.filter(|&v| v > 0.0) {
            points.push((r as f64, tv.ln()));
        }
    }
    match linear_fit(&points) {
        Some((slope, _, r2)) => {
            report.summarize("rate", -slope);
            report.summarize("rate_r2", r2);
            report.summarize("rate_rel_err", (-slope - target).abs() / target);
        }
        None => report.flag("decay rate undefined: fewer than two positive TV values"),
    }
    Ok(report)
}

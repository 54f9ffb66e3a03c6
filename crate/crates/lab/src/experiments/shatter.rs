use rayon::prelude::*;
use rcdyn::dynamics::{Chain, UpdateStream};
use rcdyn::rng::{derive_seed, role};
use rcdyn::shattering::{
    cluster_sizes, containment_audit, default_tmix_tree, joint_reveal, log_linear_fit, sparsity, t_burn,
};
use rcdyn::BoundaryCondition;

use super::{n_ln_n, regular_graph, require_monotone};
use crate::config::ExperimentConfig;
use crate::report::{Report, RowKey};
use crate::{LabError, LabResult};

/// Seed tag for the containment audits.
const AUDIT: u64 = 0x6175_6469_74;

/// `⌊0.4 log₂ n⌋`.
pub fn sparsity_radius(n: usize) -> usize {
    (0.4 * (n as f64).log2() + 1e-12).floor() as usize
}

#[derive(Clone, Debug, PartialEq)]
struct ShatterRep {
    /// Vertices per cluster size.
    size_counts: Vec<u64>,
    max_cluster: usize,
    sparse_max: usize,
    is_sparse: bool,
    open_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditRow {
    pub v0: usize,
    pub holds: bool,
    pub chain_cluster: usize,
    pub revealed_cluster: usize,
    pub generations: usize,
}

/// Containment audit of `joint_reveal` from a single vertex.
pub fn audit_once(n: usize, delta: usize, p: f64, q: f64, r: usize, t: u64, seed: u64) -> LabResult<AuditRow> {
    let v0 = (derive_seed(seed, 0) % n as u64) as usize;
    let out = joint_reveal(n, delta, p, q, &[], &[v0], r, t, seed)?;
    let audit = containment_audit(&out, p, q)?;
    Ok(AuditRow {
        v0,
        holds: audit.holds(),
        chain_cluster: audit.chain_cluster.len(),
        revealed_cluster: audit.revealed_cluster.len(),
        generations: out.k_empty,
    })
}

/// Cluster tail, sparsity and reveal containment after a long run from the
/// all-open state.
///
/// Keys: `t_mult` (run length in units of `n ln n`, default 20), `radius`
/// (default `⌊0.4 log₂ n⌋`), `k` (default 10), `tail_lo`/`tail_hi` (fit
/// window, default 2 to 30), `audits` (default 4), `audit_r` (default 3)
/// and `audit_c0` (burn-in constant, default 1).
pub fn shatter_probe(cfg: &ExperimentConfig) -> LabResult<Report> {
    require_monotone(cfg.q)?;
    let rp = cfg.resolve_p()?;
    let n = cfg.single_size()?;
    let (p, q, delta) = (rp.p, cfg.q, cfg.delta);
    let t = (cfg.extra_or("t_mult", 20.0)? * n_ln_n(n)).ceil() as u64;
    let radius: usize = cfg.extra_or("radius", sparsity_radius(n))?;
    let k: usize = cfg.extra_or("k", 10)?;
    let lo: usize = cfg.extra_or("tail_lo", 2)?;
    let hi: usize = cfg.extra_or("tail_hi", 30)?;
    let audits: usize = cfg.extra_or("audits", 4)?;
    let audit_r: usize = cfg.extra_or("audit_r", 3)?;
    let c0: f64 = cfg.extra_or("audit_c0", 1.0)?;
    if cfg.reps == 0 {
        return Err(LabError::Parameter("reps must be positive".into()));
    }
    let reps = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| -> LabResult<ShatterRep> {
            let seed = derive_seed(cfg.seed, i);
            let g = regular_graph(n, delta, seed)?;
            let mut chain = Chain::all_open(&g, p, q, &BoundaryCondition::free())?;
            let mut stream = UpdateStream::for_graph(&g, derive_seed(seed, role::UPDATES))?;
            chain.run(&mut stream, t);
            let omega = chain.omega();
            let mut size_counts = vec![0u64; n + 1];
            let sizes = cluster_sizes(&g, &omega);
            for &s in &sizes {
                size_counts[s] += 1;
            }
            let sp = sparsity(&g, &omega, radius, k)?;
            Ok(ShatterRep {
                size_counts,
                max_cluster: sizes.iter().copied().max().unwrap_or(0),
                sparse_max: sp.max(),
                is_sparse: sp.is_sparse,
                open_fraction: chain.open_count() as f64 / g.num_edges() as f64,
            })
        })
        .collect::<LabResult<Vec<_>>>()?;

    let tmix = default_tmix_tree(delta, audit_r);
    let t_audit = t_burn(c0, audit_r, n, delta, tmix)?;
    let audit_rows = (0..audits as u64)
        .into_par_iter()
        .map(|j| audit_once(n, delta, p, q, audit_r, t_audit, derive_seed(derive_seed(cfg.seed, AUDIT), j)))
        .collect::<LabResult<Vec<_>>>()?;

    let mut report = Report::new(cfg);
    report.resolve("p", p);
    report.resolve("t", t as f64);
    report.resolve("radius", radius as f64);
    report.resolve("k", k as f64);
    report.resolve("t_audit", t_audit as f64);
    report.resolve("tmix_tree_proxy", tmix);
    report.flag(format!("t_audit uses the proxy t_mix(T_{audit_r}) = |E| ln |E| = {tmix:.1}"));
    let key = RowKey { experiment: "shatter-probe", n, delta, q, p, seed: cfg.seed };
    let mut counts = vec![0u64; n + 1];
    for (i, r) in reps.iter().enumerate() {
        for (acc, c) in counts.iter_mut().zip(&r.size_counts) {
            *acc += c;
        }
        report.rows.push(key.row(Some(i), "max_cluster", r.max_cluster as f64));
        report.rows.push(key.row(Some(i), "sparse_max", r.sparse_max as f64));
        report.rows.push(key.row(Some(i), "is_sparse", r.is_sparse as u8 as f64));
        report.rows.push(key.row(Some(i), "open_fraction", r.open_fraction));
    }
    let total = (reps.len() * n) as f64;
    let mut tail = vec![0.0; n + 1];
    let mut acc = 0u64;
    for s in (0..=n).rev() {
        acc += counts[s];
        tail[s] = acc as f64 / total;
    }
    for (s, &v) in tail.iter().enumerate().take(hi + 1).skip(1) {
        report.rows.push(key.row(None, &format!("tail_{s}"), v));
    }
    match log_linear_fit(&tail, lo, hi) {
        Some(fit) => {
            report.summarize("tail_slope", fit.slope);
            report.summarize("tail_r2", fit.r2);
            report.summarize("tail_points", fit.points as f64);
        }
        None => report.flag("cluster-tail fit undefined"),
    }
    let sparse = reps.iter().filter(|r| r.is_sparse).count() as f64 / reps.len() as f64;
    report.summarize("sparse_fraction", sparse);
    report.summarize("max_cluster", reps.iter().map(|r| r.max_cluster).max().unwrap_or(0) as f64);
    for (j, a) in audit_rows.iter().enumerate() {
        let akey = RowKey { experiment: "shatter-audit", ..key };
        report.rows.push(akey.row(Some(j), "v0", a.v0 as f64));
        report.rows.push(akey.row(Some(j), "containment", a.holds as u8 as f64));
        report.rows.push(akey.row(Some(j), "chain_cluster", a.chain_cluster as f64));
        report.rows.push(akey.row(Some(j), "revealed_cluster", a.revealed_cluster as f64));
        report.rows.push(akey.row(Some(j), "generations", a.generations as f64));
    }
    if audits > 0 {
        let held = audit_rows.iter().filter(|a| a.holds).count();
        report.summarize("audits", audits as f64);
        report.summarize("audits_held", held as f64);
        if held < audits {
            report.flag(format!("containment failed on {} of {audits} audits", audits - held));
        }
    }
    Ok(report)
}

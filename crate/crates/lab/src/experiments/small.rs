use std::io::Write;

use rand::Rng;
use rcdyn::dynamics::{integer_q, potts_from_rc, Chain, SwChain, UpdateStream};
use rcdyn::exact::{enumerate, mask_to_omega, ExactTable, TABLE_EDGE_CAP};
use rcdyn::graphs::{max_tree_excess, sample_simple_counted, MultiGraph};
use rcdyn::rng::{derive_seed, rng_from_seed, role};
use rcdyn::tree::{decay_rate, hat_p, p_u, phi, TreeParams};
use rcdyn::BoundaryCondition;

use super::{config_bc, config_graph, estimate_from_batches, Estimate, MAX_TRIES};
use crate::config::ExperimentConfig;
use crate::report::{Report, RowKey};
use crate::stats::chi_square_p;
use crate::{LabError, LabResult};

/// Best rational approximation `a/b` with `b ≤ max_den`, if it matches `x`
/// to `tol`.
pub fn rational(x: f64, max_den: u64, tol: f64) -> Option<(i64, u64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as u64 * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

/// Partition function and edge marginals by enumeration. No `p_u` check:
/// this is an oracle, not a dynamics experiment.
pub fn exact_check(cfg: &ExperimentConfig) -> LabResult<Report> {
    let g = config_graph(cfg)?;
    let bc = config_bc(cfg, &g)?;
    let p = cfg.p.ok_or_else(|| LabError::Parameter("missing p".into()))?;
    let table = enumerate(&g, p, cfg.q, &bc)?;
    let mut report = Report::new(cfg);
    let key = RowKey { experiment: "exact-check", n: g.n(), delta: g.delta().unwrap_or(0), q: cfg.q, p, seed: cfg.seed };
    report.summarize("Z", table.z());
    report.summarize("log_Z", table.log_z());
    for e in 0..g.num_edges() {
        let m = table.edge_marginal(e);
        report.rows.push(key.row(Some(e), "edge_marginal", m));
        report.summarize(&format!("marginal_{e}"), m);
    }
    Ok(report)
}

/// A simple `Δ`-regular graph with its rejection count and tree excess.
/// Key `excess_radius` (default 2).
pub fn gen_graph(cfg: &ExperimentConfig) -> LabResult<(Report, MultiGraph)> {
    let n = cfg.single_size()?;
    let (g, attempts) = sample_simple_counted(n, cfg.delta, derive_seed(cfg.seed, role::GRAPH), MAX_TRIES)?;
    let r: usize = cfg.extra_or("excess_radius", 2)?;
    let mut report = Report::new(cfg);
    let key = RowKey { experiment: "gen-graph", n, delta: cfg.delta, q: cfg.q, p: cfg.p.unwrap_or(0.0), seed: cfg.seed };
    report.rows.push(key.row(None, "edges", g.num_edges() as f64));
    report.rows.push(key.row(None, "attempts", attempts as f64));
    report.rows.push(key.row(None, &format!("max_tree_excess_r{r}"), max_tree_excess(&g, r) as f64));
    report.summarize("edges", g.num_edges() as f64);
    report.summarize("attempts", attempts as f64);
    Ok((report, g))
}

/// Long-run open frequency of every edge, with batch-means errors.
///
/// The chain starts all-closed, runs `burn` updates, then `steps` updates
/// split into `batches` batches; the post-update state counts at every
/// step. Applied updates after burn-in go to `log` as
/// `step,edge_index,new_state` rows.
#[allow(clippy::too_many_arguments)]
pub fn edge_marginals(
    g: &MultiGraph,
    p: f64,
    q: f64,
    bc: &BoundaryCondition,
    steps: u64,
    burn: u64,
    batches: usize,
    seed: u64,
    mut log: Option<&mut dyn Write>,
) -> LabResult<Vec<Estimate>> {
    let batches = batches.max(2);
    if steps < batches as u64 {
        return Err(LabError::Parameter(format!("{steps} steps cannot fill {batches} batches")));
    }
    let mut chain = Chain::all_closed(g, p, q, bc)?;
    let mut stream = UpdateStream::for_graph(g, seed)?;
    chain.run(&mut stream, burn);
    let m = g.num_edges();
    let len = steps / batches as u64;
    let mut per_edge: Vec<Vec<f64>> = vec![Vec::with_capacity(batches); m];
    let mut open = chain.omega();
    for _ in 0..batches {
        let mut since = vec![1u64; m];
        let mut acc = vec![0u64; m];
        for s in 1..=len {
            if let Some((e, state)) = chain.apply(stream.next_update()) {
                if let Some(out) = log.as_deref_mut() {
                    writeln!(out, "{},{},{}", chain.t(), e, state as u8)?;
                }
                if state != open[e] {
                    if state {
                        since[e] = s;
                    } else {
                        acc[e] += s - since[e];
                    }
                    open[e] = state;
                }
            }
        }
        for e in 0..m {
            if open[e] {
                acc[e] += len + 1 - since[e];
            }
            per_edge[e].push(acc[e] as f64 / len as f64);
        }
    }
    Ok(per_edge.iter().map(|b| estimate_from_batches(b)).collect())
}

/// Glauber (FK heat-bath) run with per-edge marginals, compared with
/// enumeration when the graph is small.
///
/// Keys: `graph`, `bc`, `steps` (default `10⁴·|E|`), `burn` (default
/// `steps / 10`), `batches` (default 100), `log` (event log path).
pub fn glauber_run(cfg: &ExperimentConfig) -> LabResult<Report> {
    let g = config_graph(cfg)?;
    let bc = config_bc(cfg, &g)?;
    let rp = cfg.resolve_p()?;
    let (p, q) = (rp.p, cfg.q);
    let m = g.num_edges() as u64;
    let steps: u64 = cfg.extra_or("steps", 10_000 * m)?;
    let burn: u64 = cfg.extra_or("burn", steps / 10)?;
    let batches: usize = cfg.extra_or("batches", 100)?;
    let seed = derive_seed(cfg.seed, role::UPDATES);
    let marg = match cfg.extra.get("log") {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(file, "step,edge_index,new_state")?;
            let out = edge_marginals(&g, p, q, &bc, steps, burn, batches, seed, Some(&mut file))?;
            file.flush()?;
            out
        }
        None => edge_marginals(&g, p, q, &bc, steps, burn, batches, seed, None)?,
    };
    let mut report = Report::new(cfg);
    report.resolve("p", p);
    report.resolve("steps", steps as f64);
    report.resolve("burn", burn as f64);
    let key = RowKey { experiment: "glauber-run", n: g.n(), delta: cfg.delta, q, p, seed: cfg.seed };
    for (e, est) in marg.iter().enumerate() {
        report.rows.push(key.row(Some(e), "edge_marginal", est.mean));
        report.rows.push(key.row(Some(e), "edge_marginal_se", est.se));
    }
    report.summarize("open_fraction", marg.iter().map(|e| e.mean).sum::<f64>() / marg.len().max(1) as f64);
    if g.num_edges() <= TABLE_EDGE_CAP.min(20) {
        let table = enumerate(&g, p, q, &bc)?;
        let mut worst: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        for (e, est) in marg.iter().enumerate() {
            let d = (est.mean - table.edge_marginal(e)).abs();
            worst = worst.max(d);
            worst_z = worst_z.max(d / est.se);
        }
        report.summarize("max_abs_err", worst);
        report.summarize("max_z", worst_z);
    }
    Ok(report)
}

/// Mean over non-loop edges and over steps of `1[σ_u = σ_v]` along a
/// Swendsen–Wang run, with a batch-means error.
pub fn sw_agreement(g: &MultiGraph, p: f64, q: f64, steps: u64, burn: u64, batches: usize, seed: u64) -> LabResult<Estimate> {
    let edges: Vec<(usize, usize)> = g.endpoint_list().into_iter().filter(|(a, b)| a != b).collect();
    if edges.is_empty() {
        return Err(LabError::Parameter("graph has no non-loop edges".into()));
    }
    let batches = batches.max(2);
    let len = (steps / batches as u64).max(1);
    let mut chain = SwChain::new(g, p, q, seed)?;
    for _ in 0..burn {
        chain.step();
    }
    let mut means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut agree = 0u64;
        for _ in 0..len {
            chain.step();
            let s = chain.spins();
            agree += edges.iter().filter(|&&(a, b)| s[a] == s[b]).count() as u64;
        }
        means.push(agree as f64 / (len * edges.len() as u64) as f64);
    }
    Ok(estimate_from_batches(&means))
}

/// Exact `P(σ_u = σ_v)` averaged over non-loop edges, through the
/// Edwards–Sokal identity `P(σ_u = σ_v) = P(u ↔ v) + (1 − P(u ↔ v))/q`.
pub fn exact_agreement(g: &MultiGraph, table: &ExactTable) -> f64 {
    let edges: Vec<(usize, usize)> = g.endpoint_list().into_iter().filter(|(a, b)| a != b).collect();
    edges
        .iter()
        .map(|&(a, b)| {
            let c = table.connection_probability(g, a, b);
            c + (1.0 - c) / table.q()
        })
        .sum::<f64>()
        / edges.len() as f64
}

/// Swendsen–Wang run. Keys: `graph`, `steps` (default 10⁶), `burn`
/// (default 1000), `batches` (default 100).
pub fn sw_run(cfg: &ExperimentConfig) -> LabResult<Report> {
    let g = config_graph(cfg)?;
    let rp = cfg.resolve_p()?;
    let (p, q) = (rp.p, cfg.q);
    integer_q(q)?;
    let steps: u64 = cfg.extra_or("steps", 1_000_000)?;
    let burn: u64 = cfg.extra_or("burn", 1000)?;
    let batches: usize = cfg.extra_or("batches", 100)?;
    let est = sw_agreement(&g, p, q, steps, burn, batches, derive_seed(cfg.seed, role::SPINS))?;
    let mut report = Report::new(cfg);
    report.resolve("p", p);
    let key = RowKey { experiment: "sw-run", n: g.n(), delta: cfg.delta, q, p, seed: cfg.seed };
    report.rows.push(key.row(None, "agreement", est.mean));
    report.rows.push(key.row(None, "agreement_se", est.se));
    report.summarize("agreement", est.mean);
    report.summarize("agreement_se", est.se);
    if g.num_edges() <= TABLE_EDGE_CAP.min(20) {
        let table = enumerate(&g, p, q, &BoundaryCondition::free())?;
        report.summarize("agreement_exact", exact_agreement(&g, &table));
    }
    Ok(report)
}

/// Result of sampling spins through the Edwards–Sokal map.
#[derive(Clone, Debug, PartialEq)]
pub struct EsCheck {
    pub p_value: f64,
    pub max_abs_diff: f64,
}

/// Draws `ω` exactly from the random-cluster table, colours it with
/// [`potts_from_rc`] and compares the spin law with the Potts law
/// `∝ Π_e (1 − p + p·1[σ_u = σ_v])` computed by enumeration.
pub fn es_consistency(g: &MultiGraph, p: f64, q: f64, samples: usize, seed: u64) -> LabResult<EsCheck> {
    let qi = integer_q(q)? as usize;
    let n = g.n();
    let states = qi.checked_pow(n as u32).filter(|&s| s <= 1 << 16).ok_or_else(|| {
        LabError::Parameter(format!("q^n = {qi}^{n} spin states is too many to enumerate"))
    })?;
    let ends = g.endpoint_list();
    let spins_of = |mut idx: usize| -> Vec<usize> {
        (0..n)
            .map(|_| {
                let s = idx % qi;
                idx /= qi;
                s
            })
            .collect()
    };
    let mut potts: Vec<f64> = (0..states)
        .map(|i| {
            let s = spins_of(i);
            ends.iter().map(|&(a, b)| if s[a] == s[b] { 1.0 } else { 1.0 - p }).product()
        })
        .collect();
    let z: f64 = potts.iter().sum();
    potts.iter_mut().for_each(|w| *w /= z);

    let table = enumerate(g, p, q, &BoundaryCondition::free())?;
    let mut cdf = Vec::with_capacity(table.probs().len());
    let mut acc = 0.0;
    for &w in table.probs() {
        acc += w;
        cdf.push(acc);
    }
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0.0; states];
    for _ in 0..samples {
        let u: f64 = rng.gen::<f64>() * acc;
        let mask = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
        let spins = potts_from_rc(g, &mask_to_omega(mask, g.num_edges()), q, &mut rng)?;
        let idx = spins.iter().rev().fold(0usize, |i, &s| i * qi + s as usize);
        counts[idx] += 1.0;
    }
    let expected: Vec<f64> = potts.iter().map(|w| w * samples as f64).collect();
    let max_abs_diff = counts
        .iter()
        .zip(&potts)
        .map(|(c, w)| (c / samples as f64 - w).abs())
        .fold(0.0, f64::max);
    Ok(EsCheck { p_value: chi_square_p(&counts, &expected), max_abs_diff })
}

/// `φ_h` for `h = 0..=h_max` with the ratio `φ_{h+1}/φ_h`. Key `h_max`
/// (default 60).
pub fn tree_recursion(cfg: &ExperimentConfig) -> LabResult<Report> {
    let p = cfg.p.ok_or_else(|| LabError::Parameter("missing p".into()))?;
    let params = TreeParams::new(p, cfg.q, cfg.delta)?;
    let h_max: usize = cfg.extra_or("h_max", 60)?;
    let mut report = Report::new(cfg);
    let key = RowKey { experiment: "tree-recursion", n: 0, delta: cfg.delta, q: cfg.q, p, seed: cfg.seed };
    for h in 0..=h_max {
        report.rows.push(key.row(Some(h), "phi", phi(h, &params)));
    }
    report.summarize("phi_h_max", phi(h_max, &params));
    report.summarize("decay_rate", decay_rate(&params, h_max));
    report.summarize("d_hat_p", params.d_hat_p());
    Ok(report)
}

/// `p_u(q, Δ)` with `p̂(p_u)` and `d·p̂(p_u)`. Key `tol` (default 1e−9).
pub fn p_u_report(cfg: &ExperimentConfig) -> LabResult<Report> {
    let tol: f64 = cfg.extra_or("tol", 1e-9)?;
    let pu = p_u(cfg.q, cfg.delta, tol)?;
    let h = hat_p(pu, cfg.q)?;
    let mut report = Report::new(cfg);
    let key = RowKey { experiment: "p-u", n: 0, delta: cfg.delta, q: cfg.q, p: pu, seed: cfg.seed };
    report.rows.push(key.row(None, "p_u", pu));
    report.summarize("p_u", pu);
    report.summarize("hat_p", h);
    report.summarize("d_hat_p", (cfg.delta - 1) as f64 * h);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rcdyn::graphs::named;

    #[test]
    fn rational_recovers_small_fractions() {
        assert_eq!(rational(5.0 / 14.0, 1000, 1e-12), Some((5, 14)));
        assert_eq!(rational(0.5, 1000, 1e-12), Some((1, 2)));
        assert_eq!(rational(3.0, 1000, 1e-12), Some((3, 1)));
        assert_eq!(rational(std::f64::consts::PI, 1000, 1e-12), None);
    }

    #[test]
    fn occupancy_of_single_edge_matches_hat_p() {
        let g = named::single_edge();
        let est = edge_marginals(&g, 0.5, 2.0, &BoundaryCondition::free(), 200_000, 100, 50, 3, None).unwrap();
        assert!(est[0].within(1.0 / 3.0, 0.005), "{est:?}");
    }

    #[test]
    fn event_log_rows() {
        let g = named::triangle();
        let mut buf = Vec::new();
        edge_marginals(&g, 0.5, 2.0, &BoundaryCondition::free(), 20, 0, 2, 1, Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 20);
        assert!(text.lines().all(|l| l.split(',').count() == 3));
    }
}

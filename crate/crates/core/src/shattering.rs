//! Joint revealing of a configuration-model graph together with localized
//! FK configurations, the dominating branching process, and the sparsity
//! and cluster-tail diagnostics of the shattered phase.
//!
//! The revealing procedure explores out of a vertex set `V0` one ball at a
//! time. Each new ball `A_m` carries the censored wired chain `X¹_{A_m,t}`
//! driven by the same half-edge update stream as the full chain, so the
//! cluster of `V0` in the full chain can be audited against the revealed
//! configuration on the very same randomness.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use rayon::prelude::*;

use crate::boundary::BoundaryCondition;
use crate::dynamics::{Chain, LocalEdge, LocalizedChain, UpdateStream};
use crate::error::{check_p, check_q, Error, Result};
use crate::exact::{enumerate, mask_to_omega};
use crate::graphs::{ball, Edge, HalfEdge, MultiGraph, RevealCursor};
use crate::rng::{derive_seed, rng_from_seed, role, SimRng};
use crate::tree::{build_complete_tree, tree_edge_count, TreeBoundary};
use crate::unionfind::UnionFind;

/// Vertex count of the `Δ`-regular tree of depth `r`.
pub fn tree_vertex_count(delta: usize, r: usize) -> usize {
    tree_edge_count(delta, r) + 1
}

/// Default local mixing scale `|E(T_r)| ln |E(T_r)|`.
pub fn default_tmix_tree(delta: usize, r: usize) -> f64 {
    let e = tree_edge_count(delta, r) as f64;
    e * e.ln().max(1.0)
}

/// Burn-in time `⌈C0 · n ln n · tmix_tree / |E(T_r)|⌉`.
pub fn t_burn(c0: f64, r: usize, n: usize, delta: usize, tmix_tree: f64) -> Result<u64> {
    if !(c0 > 0.0 && tmix_tree > 0.0) || r == 0 || n < 2 || delta < 2 {
        return Err(Error::Parameter(format!(
            "t_burn needs c0 > 0, tmix > 0, r >= 1, n >= 2, delta >= 2 (got c0 = {c0}, tmix = {tmix_tree}, r = {r}, n = {n}, delta = {delta})"
        )));
    }
    let nf = n as f64;
    let raw = c0 * nf * nf.ln() * tmix_tree / tree_edge_count(delta, r) as f64;
    Ok((raw - 1e-9 * raw.abs()).ceil() as u64)
}

/// `e^{s−μ} (s/μ)^{−s}`, the Chernoff bound on `P(Bin(N, p) ≥ s)` for
/// `s ≥ μ = Np`. Returns 1 below the mean.
pub fn chernoff_bound(trials: u64, prob: f64, s: f64) -> f64 {
    let mu = trials as f64 * prob;
    if s <= mu || mu <= 0.0 {
        return if mu <= 0.0 && s > 0.0 { 0.0 } else { 1.0 };
    }
    (s - mu - s * (s / mu).ln()).exp().min(1.0)
}

/// Threshold `4 |E(T_r)| t / (Δn)` on per-ball update counts.
pub fn update_count_threshold(t: u64, r: usize, delta: usize, n: usize) -> f64 {
    4.0 * tree_edge_count(delta, r) as f64 * t as f64 / (delta * n) as f64
}

/// One step `m` of the revealing procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevealStep {
    pub m: usize,
    pub vertex: usize,
    /// `|A_m|`, including `A_0`.
    pub revealed: usize,
    /// Size of the generation the vertex belongs to.
    pub generation_size: usize,
    pub k: usize,
    /// Edges new at this step.
    pub new_edges: usize,
    /// Updates of the stream that landed on the new edges by time `t`.
    pub kappa: u64,
}

impl RevealStep {
    /// `m,v_m,|A_m|,|V_k|,k`.
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.m, self.vertex, self.revealed, self.generation_size, self.k)
    }
}

/// Result of [`joint_reveal`].
#[derive(Clone, Debug)]
pub struct RevealOutcome {
    pub n: usize,
    pub delta: usize,
    pub t: u64,
    /// Seed of the shared half-edge update stream.
    pub update_seed: u64,
    pub v0: Vec<usize>,
    /// Number of edges of `A_0` at the front of `edges`.
    pub initial_edges: usize,
    /// `A_final` in reveal order.
    pub edges: Vec<Edge>,
    /// `ω̃` on `edges[initial_edges..]`.
    pub omega_tilde: Vec<bool>,
    /// `V_0, V_1, …` up to the last nonempty generation.
    pub generations: Vec<Vec<usize>>,
    /// First `k` with `V_k = ∅`.
    pub k_empty: usize,
    pub trace: Vec<RevealStep>,
    cursor: RevealCursor,
}

impl RevealOutcome {
    /// Vertices joined to `V0` by `ω̃`-open edges, sorted.
    pub fn cluster(&self) -> Vec<usize> {
        let open = self.edges[self.initial_edges..]
            .iter()
            .zip(&self.omega_tilde)
            .filter(|(_, &s)| s)
            .map(|(e, _)| e.endpoints());
        cluster_of(&self.v0, open)
    }

    /// Vertices touched by `A_final ∖ A_0`.
    pub fn explored_vertices(&self) -> HashSet<usize> {
        self.edges[self.initial_edges..]
            .iter()
            .flat_map(|e| {
                let (a, b) = e.endpoints();
                [a, b]
            })
            .collect()
    }

    /// The cursor after revealing, for completing the graph.
    pub fn cursor(&self) -> &RevealCursor {
        &self.cursor
    }

    /// Trace rows with header `m,v_m,|A_m|,|V_k|,k`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("m,v_m,|A_m|,|V_k|,k\n");
        for s in &self.trace {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }
}

fn cluster_of(seeds: &[usize], open: impl Iterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (a, b) in open {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut seen: HashSet<usize> = seeds.iter().copied().collect();
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    while let Some(u) = queue.pop_front() {
        for &w in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    out
}

struct Revealer {
    cursor: RevealCursor,
    delta: usize,
    edge_ids: HashMap<(usize, usize), usize>,
    edges: Vec<Edge>,
}

impl Revealer {
    fn half_id(&self, h: HalfEdge) -> usize {
        h.vertex * self.delta + h.slot
    }

    fn push(&mut self, e: Edge) -> usize {
        let id = self.edges.len();
        let (x, y) = (self.half_id(e.a), self.half_id(e.b));
        self.edge_ids.insert((x.min(y), x.max(y)), id);
        self.edges.push(e);
        id
    }

    fn edge_at(&self, h: HalfEdge) -> Option<usize> {
        let other = self.cursor.partner(h)?;
        let (x, y) = (self.half_id(h), self.half_id(other));
        self.edge_ids.get(&(x.min(y), x.max(y))).copied()
    }

    /// Reveals `B_r^out(v)`: breadth-first from `v`, exhausting every vertex
    /// at distance `< r`, never leaving `v` through an edge already revealed.
    /// Returns the indices of the newly revealed edges.
    fn reveal_ball(&mut self, v: usize, r: usize) -> Result<Vec<usize>> {
        let mut fresh = Vec::new();
        let mut dist = HashMap::from([(v, 0usize)]);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du >= r {
                continue;
            }
            for slot in 0..self.delta {
                let h = HalfEdge::new(u, slot);
                let e = match self.edge_at(h) {
                    Some(e) if u == v && !fresh.contains(&e) => continue,
                    Some(e) => e,
                    None => {
                        let edge = self.cursor.reveal_next(h)?;
                        let e = self.push(edge);
                        fresh.push(e);
                        e
                    }
                };
                let edge = self.edges[e];
                let (a, b) = edge.endpoints();
                let w = if a == u { b } else { a };
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(w) {
                    slot.insert(du + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(fresh)
    }
}

/// Joint revealing of `G ~ CM(n, Δ)` and the localized configurations
/// `X¹_{A_m,t}`, started from the forced edges `a0` and the vertex set `v0`.
///
/// Each generation is visited in ascending vertex order. The graph uses the
/// seed `derive_seed(seed, GRAPH)` and the update stream, shared by every
/// ball and by [`containment_audit`], uses `derive_seed(seed, UPDATES)`.
#[allow(clippy::too_many_arguments)]
pub fn joint_reveal(
    n: usize,
    delta: usize,
    p: f64,
    q: f64,
    a0: &[(HalfEdge, HalfEdge)],
    v0: &[usize],
    r: usize,
    t: u64,
    seed: u64,
) -> Result<RevealOutcome> {
    check_p(p)?;
    check_q(q)?;
    if r == 0 {
        return Err(Error::Parameter("ball radius r must be at least 1".into()));
    }
    if let Some(&v) = v0.iter().find(|&&v| v >= n) {
        return Err(Error::Usage(format!("vertex {v} out of range for n = {n}")));
    }
    let cursor = RevealCursor::new(n, delta, derive_seed(seed, role::GRAPH))?;
    let update_seed = derive_seed(seed, role::UPDATES);
    let mut rv = Revealer { cursor, delta, edge_ids: HashMap::new(), edges: Vec::new() };
    for &(x, y) in a0 {
        let e = rv.cursor.force_pair(x, y)?;
        rv.push(e);
    }
    let initial_edges = rv.edges.len();

    let mut v0_sorted = v0.to_vec();
    v0_sorted.sort_unstable();
    v0_sorted.dedup();

    let mut uf = UnionFind::new(n);
    for w in v0_sorted.windows(2) {
        uf.union(w[0], w[1]);
    }
    let mut omega_tilde = Vec::new();
    let mut deg_off_a0: HashMap<usize, usize> = HashMap::new();
    let mut listed: HashSet<usize> = v0_sorted.iter().copied().collect();
    let mut generations = Vec::new();
    let mut trace = Vec::new();
    let mut current = v0_sorted.clone();
    let mut k = 0;
    let mut m = 1;

    while !current.is_empty() {
        let mut next: Vec<usize> = Vec::new();
        for &v in &current {
            let fresh = rv.reveal_ball(v, r)?;
            let mut kappa = 0;
            if !fresh.is_empty() {
                let local: Vec<LocalEdge> = fresh
                    .iter()
                    .map(|&e| {
                        let edge = rv.edges[e];
                        LocalEdge { halves: [rv.half_id(edge.a), rv.half_id(edge.b)], ends: edge.endpoints() }
                    })
                    .collect();
                let mut deg: HashMap<usize, usize> = HashMap::new();
                for le in &local {
                    *deg.entry(le.ends.0).or_default() += 1;
                    *deg.entry(le.ends.1).or_default() += 1;
                }
                let mut boundary: Vec<usize> = deg.iter().filter(|&(_, &d)| d < delta).map(|(&w, _)| w).collect();
                boundary.sort_unstable();
                let mut chain = LocalizedChain::new(&local, &boundary, p, q)?;
                let mut stream = UpdateStream::new(update_seed, n * delta)?;
                for _ in 0..t {
                    if chain.apply(stream.next_update()).is_some() {
                        kappa += 1;
                    }
                }
                let states = chain.omega();
                for (le, &s) in local.iter().zip(&states) {
                    *deg_off_a0.entry(le.ends.0).or_default() += 1;
                    *deg_off_a0.entry(le.ends.1).or_default() += 1;
                    if s {
                        uf.union(le.ends.0, le.ends.1);
                    }
                }
                omega_tilde.extend(states);
            }
            trace.push(RevealStep {
                m,
                vertex: v,
                revealed: rv.edges.len(),
                generation_size: current.len(),
                k,
                new_edges: fresh.len(),
                kappa,
            });
            if let Some(&root) = v0_sorted.first() {
                let mut joined: Vec<usize> = deg_off_a0
                    .iter()
                    .filter(|&(w, &d)| d < delta && !listed.contains(w))
                    .map(|(&w, _)| w)
                    .filter(|&w| uf.same(w, root))
                    .collect();
                joined.sort_unstable();
                for w in joined {
                    listed.insert(w);
                    next.push(w);
                }
            }
            m += 1;
        }
        generations.push(current);
        next.sort_unstable();
        current = next;
        k += 1;
    }

    Ok(RevealOutcome {
        n,
        delta,
        t,
        update_seed,
        v0: v0_sorted,
        initial_edges,
        edges: rv.edges,
        omega_tilde,
        generations,
        k_empty: k,
        trace,
        cursor: rv.cursor,
    })
}

/// Result of checking the revealed cluster against the full chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainmentAudit {
    /// Cluster of `V0` in `X¹_{G,t}(E(G) ∖ A_0)`.
    pub chain_cluster: Vec<usize>,
    /// Cluster of `V0` in `ω̃`.
    pub revealed_cluster: Vec<usize>,
    /// Chain cluster within the revealed cluster.
    pub vertices_contained: bool,
    /// Every open chain edge of the cluster lies in `A_final ∖ A_0`.
    pub edges_contained: bool,
    /// Every revealed edge has `X¹_{G,t} ≤ ω̃`.
    pub dominated: bool,
}

impl ContainmentAudit {
    pub fn holds(&self) -> bool {
        self.vertices_contained && self.edges_contained && self.dominated
    }
}

/// Completes the graph canonically, runs the all-open chain on it for `t`
/// steps of the shared stream, and compares clusters.
pub fn containment_audit(outcome: &RevealOutcome, p: f64, q: f64) -> Result<ContainmentAudit> {
    let g = outcome.cursor.clone().complete();
    let mut chain = Chain::all_open(&g, p, q, &BoundaryCondition::free())?;
    let mut stream = UpdateStream::new(outcome.update_seed, g.num_half_edges())?;
    chain.run(&mut stream, outcome.t);
    let omega = chain.omega();

    let index_of = |e: &Edge| g.edge_of_half_edge(g.half_edge_index(e.a));
    let a0: HashSet<usize> = outcome.edges[..outcome.initial_edges].iter().map(index_of).collect();
    let revealed: HashMap<usize, bool> = outcome.edges[outcome.initial_edges..]
        .iter()
        .zip(&outcome.omega_tilde)
        .map(|(e, &s)| (index_of(e), s))
        .collect();

    let open_off_a0 = (0..g.num_edges()).filter(|e| omega[*e] && !a0.contains(e));
    let chain_cluster = cluster_of(&outcome.v0, open_off_a0.clone().map(|e| g.endpoints(e)));
    let revealed_cluster = outcome.cluster();
    let in_revealed: HashSet<usize> = revealed_cluster.iter().copied().collect();
    let in_chain: HashSet<usize> = chain_cluster.iter().copied().collect();

    let vertices_contained = chain_cluster.iter().all(|v| in_revealed.contains(v));
    let edges_contained = open_off_a0
        .filter(|&e| {
            let (a, b) = g.endpoints(e);
            in_chain.contains(&a) || in_chain.contains(&b)
        })
        .all(|e| revealed.contains_key(&e));
    let dominated = revealed.iter().all(|(&e, &s)| !omega[e] || s);
    Ok(ContainmentAudit { chain_cluster, revealed_cluster, vertices_contained, edges_contained, dominated })
}

/// Offspring law of the branching process.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgenyLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl ProgenyLaw {
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        let total: f64 = pmf.iter().sum();
        if pmf.is_empty() || pmf.iter().any(|&x| !(x >= 0.0)) || !(total > 0.0) {
            return Err(Error::Parameter("progeny pmf must be nonnegative with positive mass".into()));
        }
        let pmf: Vec<f64> = pmf.iter().map(|x| x / total).collect();
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        Ok(ProgenyLaw { pmf, cdf })
    }

    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        let max = samples.iter().copied().max().ok_or_else(|| Error::Parameter("no progeny samples".into()))?;
        let mut pmf = vec![0.0; max as usize + 1];
        for &s in samples {
            pmf[s as usize] += 1.0;
        }
        Self::from_pmf(pmf)
    }

    /// The law that is always zero.
    pub fn zero() -> Self {
        Self::from_pmf(vec![1.0]).expect("valid pmf")
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        let u: f64 = rng.gen();
        self.cdf.iter().position(|&c| u < c).unwrap_or(self.pmf.len() - 1) as u64
    }
}

/// Leaves of the tree joined to the root by open edges.
fn root_leaf_count(tree: &crate::tree::CompleteTree, omega: &[bool]) -> u64 {
    let mut uf = UnionFind::new(tree.graph.n());
    for (e, &open) in omega.iter().enumerate() {
        if open {
            let (a, b) = tree.graph.endpoints(e);
            uf.union(a, b);
        }
    }
    tree.leaves.iter().filter(|&&l| uf.same(l, 0)).count() as u64
}

/// Default progeny burn-in `50 |E(T_r)| ln |E(T_r)|`.
pub fn default_progeny_burn(delta: usize, r: usize) -> u64 {
    (50.0 * default_tmix_tree(delta, r)).ceil() as u64
}

/// Largest radius sampled by exact enumeration.
pub const EXACT_PROGENY_RADIUS: usize = 2;

/// Exact law of the number of leaves of `T_r` joined to the root under the
/// `(1,↻)` measure, by enumeration.
pub fn exact_progeny_law(r: usize, p: f64, q: f64, delta: usize) -> Result<ProgenyLaw> {
    let tree = build_complete_tree(delta, r, TreeBoundary::WiredWithRoot)?;
    let table = enumerate(&tree.graph, p, q, &tree.bc)?;
    let m = tree.graph.num_edges();
    let mut pmf = vec![0.0; tree.leaves.len() + 1];
    for (mask, &pr) in table.probs().iter().enumerate() {
        pmf[root_leaf_count(&tree, &mask_to_omega(mask, m)) as usize] += pr;
    }
    ProgenyLaw::from_pmf(pmf)
}

/// One draw of the root-leaf count under `π^{(1,↻)}_{T_r}`: exact for
/// `r ≤ 2`, otherwise the state of an all-open FK chain after `burn`
/// steps (default [`default_progeny_burn`]).
pub fn progeny_sample(r: usize, p: f64, q: f64, delta: usize, seed: u64, burn: Option<u64>) -> Result<u64> {
    if r == 0 {
        return Err(Error::Parameter("ball radius r must be at least 1".into()));
    }
    if r <= EXACT_PROGENY_RADIUS {
        let law = exact_progeny_law(r, p, q, delta)?;
        return Ok(law.sample(&mut rng_from_seed(seed)));
    }
    let tree = build_complete_tree(delta, r, TreeBoundary::WiredWithRoot)?;
    let mut chain = Chain::all_open(&tree.graph, p, q, &tree.bc)?;
    let mut stream = UpdateStream::for_graph(&tree.graph, seed)?;
    chain.run(&mut stream, burn.unwrap_or_else(|| default_progeny_burn(delta, r)));
    Ok(root_leaf_count(&tree, &chain.omega()))
}

/// Progeny law for the branching process: exact for `r ≤ 2`, otherwise the
/// empirical law of `samples` independent burned-in chains.
pub fn progeny_law(
    r: usize,
    p: f64,
    q: f64,
    delta: usize,
    samples: usize,
    seed: u64,
    burn: Option<u64>,
) -> Result<ProgenyLaw> {
    if r <= EXACT_PROGENY_RADIUS {
        return exact_progeny_law(r.max(1), p, q, delta);
    }
    let draws: Result<Vec<u64>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| progeny_sample(r, p, q, delta, derive_seed(seed, i), burn))
        .collect();
    ProgenyLaw::from_samples(&draws?)
}

/// Parameters of the size-dependent branching process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchingConfig {
    pub z0: u64,
    /// Probability that an individual is `Bad`.
    pub bad_prob: f64,
    /// `|V(T_r)|`.
    pub tree_vertices: u64,
}

impl BranchingConfig {
    /// `Bad` with probability `n^{−1/2}`; `n = None` disables `Bad`.
    pub fn new(z0: u64, n: Option<usize>, r: usize, delta: usize) -> Result<Self> {
        if r == 0 || delta < 2 {
            return Err(Error::Parameter("need r >= 1 and delta >= 2".into()));
        }
        let bad_prob = n.map_or(0.0, |n| 1.0 / (n as f64).sqrt());
        Ok(BranchingConfig { z0, bad_prob, tree_vertices: tree_vertex_count(delta, r) as u64 })
    }
}

pub const DEFAULT_POP_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchingOutcome {
    /// `Z_0, Z_1, …`.
    pub generations: Vec<u64>,
    pub total: u64,
    pub hit_cap: bool,
}

/// Runs the size-dependent process until extinction or until the total
/// population exceeds `pop_cap`.
pub fn branching_run(
    config: &BranchingConfig,
    mut progeny: impl FnMut(&mut SimRng) -> u64,
    seed: u64,
    pop_cap: u64,
) -> Result<BranchingOutcome> {
    if pop_cap == 0 {
        return Err(Error::Parameter("pop_cap must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.bad_prob) {
        return Err(Error::Parameter(format!("Bad probability {} outside [0, 1]", config.bad_prob)));
    }
    let mut rng = rng_from_seed(seed);
    let mut generations = vec![config.z0];
    let mut total = config.z0;
    let mut z = config.z0;
    while z > 0 && total <= pop_cap {
        let mut next: u64 = 0;
        for _ in 0..z {
            let child = if config.bad_prob > 0.0 && rng.gen::<f64>() < config.bad_prob {
                config.tree_vertices.saturating_mul(total)
            } else {
                progeny(&mut rng)
            };
            next = next.saturating_add(child);
            if total.saturating_add(next) > pop_cap {
                break;
            }
        }
        total = total.saturating_add(next);
        generations.push(next);
        z = next;
    }
    Ok(BranchingOutcome { generations, total: total.min(pop_cap.saturating_add(1)), hit_cap: total > pop_cap })
}

/// Least-squares fit of `ln y` against `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Fits `ln y_k = a + b k` over `k ∈ [lo, hi]` with `y_k > 0`.
pub fn log_linear_fit(y: &[f64], lo: usize, hi: usize) -> Option<LogLinearFit> {
    let pts: Vec<(f64, f64)> = (lo..=hi.min(y.len().saturating_sub(1)))
        .filter(|&k| y[k] > 0.0)
        .map(|k| (k as f64, y[k].ln()))
        .collect();
    let (slope, intercept, r2) = linear_fit(&pts)?;
    Some(LogLinearFit { slope, intercept, r2, points: pts.len() })
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((b, my - b * mx, r2))
}

/// Cluster sizes of every vertex under the open edges of `omega`.
pub fn cluster_sizes(g: &MultiGraph, omega: &[bool]) -> Vec<usize> {
    let mut uf = UnionFind::new(g.n());
    for (e, &open) in omega.iter().enumerate() {
        if open {
            let (a, b) = g.endpoints(e);
            uf.union(a, b);
        }
    }
    (0..g.n()).map(|v| uf.set_size(v)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterTail {
    /// `tail[k] = P(|C_v| ≥ k)` over all vertices and replicas.
    pub tail: Vec<f64>,
    /// Largest cluster of each replica.
    pub max_cluster: Vec<usize>,
}

impl ClusterTail {
    pub fn fit(&self, lo: usize, hi: usize) -> Option<LogLinearFit> {
        log_linear_fit(&self.tail, lo, hi)
    }
}

/// Empirical tail of `|C_v(X¹_t)|` from `reps` all-open chains on `g`,
/// replica `i` driven by `derive_seed(seed, i)`.
pub fn cluster_tail(g: &MultiGraph, p: f64, q: f64, t: u64, reps: usize, seed: u64) -> Result<ClusterTail> {
    let runs: Result<Vec<Vec<usize>>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut chain = Chain::all_open(g, p, q, &BoundaryCondition::free())?;
            let mut stream = UpdateStream::for_graph(g, derive_seed(seed, i))?;
            chain.run(&mut stream, t);
            Ok(cluster_sizes(g, &chain.omega()))
        })
        .collect();
    let runs = runs?;
    let n = g.n();
    let mut counts = vec![0u64; n + 2];
    for sizes in &runs {
        for &s in sizes {
            counts[s] += 1;
        }
    }
    let total = (runs.len() * n).max(1) as f64;
    let mut tail = vec![0.0; n + 1];
    let mut acc = 0u64;
    for k in (0..=n).rev() {
        acc += counts[k];
        tail[k] = acc as f64 / total;
    }
    let max_cluster = runs.iter().map(|s| s.iter().copied().max().unwrap_or(0)).collect();
    Ok(ClusterTail { tail, max_cluster })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sparsity {
    /// `|𝔙_{B_R(v)}(ω)|` for every `v`.
    pub counts: Vec<usize>,
    pub is_sparse: bool,
}

impl Sparsity {
    pub fn max(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Vertices of `B_R(v)` in non-singleton classes of the boundary condition
/// induced by `ω` off the ball, for every `v`; `(K,R)`-sparse iff every
/// count is at most `k`.
pub fn sparsity(g: &MultiGraph, omega: &[bool], radius: usize, k: usize) -> Result<Sparsity> {
    if radius == 0 {
        return Err(Error::Parameter("sparsity radius must be at least 1".into()));
    }
    if omega.len() != g.num_edges() {
        return Err(Error::Usage(format!(
            "configuration has {} entries for {} edges",
            omega.len(),
            g.num_edges()
        )));
    }
    let n = g.n();
    let mut stamp = vec![usize::MAX; n];
    let mut label = vec![0usize; n];
    let mut counts = Vec::with_capacity(n);
    let mut queue = Vec::new();
    for v in 0..n {
        let b = ball(g, v, radius);
        let inside: HashSet<usize> = b.edges.iter().copied().collect();
        let mut class_sizes: Vec<usize> = Vec::new();
        let mut member: Vec<usize> = Vec::with_capacity(b.vertices.len());
        for &s in &b.vertices {
            if stamp[s] == v {
                member.push(label[s]);
                class_sizes[label[s]] += 1;
                continue;
            }
            let id = class_sizes.len();
            class_sizes.push(1);
            member.push(id);
            stamp[s] = v;
            label[s] = id;
            queue.clear();
            queue.push(s);
            while let Some(u) = queue.pop() {
                for &(w, e) in g.neighbors(u) {
                    if omega[e] && !inside.contains(&e) && stamp[w] != v {
                        stamp[w] = v;
                        label[w] = id;
                        queue.push(w);
                    }
                }
            }
        }
        counts.push(member.iter().filter(|&&c| class_sizes[c] >= 2).count());
    }
    let is_sparse = counts.iter().all(|&c| c <= k);
    Ok(Sparsity { counts, is_sparse })
}

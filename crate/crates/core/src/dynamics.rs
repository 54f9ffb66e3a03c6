//! FK (Glauber) dynamics, its grand monotone coupling, censored localized
//! chains, and Swendsen–Wang dynamics.
//!
//! Every chain is driven by an [`UpdateStream`] of `(half-edge, U)` pairs.
//! The half-edge is uniform over all half-edges, so the edge containing it
//! is uniform over the edges. A chain that does not own the edge containing
//! the half-edge (a censored chain) ignores the update but still advances
//! its clock; chains fed the same stream are therefore coupled step by step.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::boundary::BoundaryCondition;
use crate::connectivity::{Backend, BackendKind, Connectivity};
use crate::error::{check_p, check_q, Error, Result};
use crate::graphs::MultiGraph;
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::unionfind::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Update {
    pub half_edge: usize,
    pub u: f64,
}

/// Seeded sequence of updates over `half_edges` half-edges.
#[derive(Clone, Debug)]
pub struct UpdateStream {
    seed: u64,
    half_edges: usize,
    position: u64,
    rng: SimRng,
}

impl UpdateStream {
    pub fn new(seed: u64, half_edges: usize) -> Result<Self> {
        if half_edges == 0 {
            return Err(Error::Usage("update stream over zero half-edges".into()));
        }
        Ok(UpdateStream { seed, half_edges, position: 0, rng: rng_from_seed(seed) })
    }

    pub fn for_graph(g: &MultiGraph, seed: u64) -> Result<Self> {
        Self::new(seed, g.num_half_edges())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn half_edges(&self) -> usize {
        self.half_edges
    }

    /// Number of updates drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn next_update(&mut self) -> Update {
        self.position += 1;
        let half_edge = self.rng.gen_range(0..self.half_edges);
        let u = self.rng.gen::<f64>();
        Update { half_edge, u }
    }

    pub fn skip(&mut self, k: u64) {
        for _ in 0..k {
            self.next_update();
        }
    }
}

impl Iterator for UpdateStream {
    type Item = Update;

    fn next(&mut self) -> Option<Update> {
        Some(self.next_update())
    }
}

#[derive(Clone, Debug)]
enum HalfEdgeMap {
    Dense(Vec<usize>),
    Sparse(HashMap<usize, usize>),
}

impl HalfEdgeMap {
    fn get(&self, h: usize) -> Option<usize> {
        match self {
            HalfEdgeMap::Dense(v) => v.get(h).copied(),
            HalfEdgeMap::Sparse(m) => m.get(&h).copied(),
        }
    }
}

/// State of one FK-dynamics chain.
#[derive(Clone, Debug)]
pub struct Chain {
    p: f64,
    q: f64,
    hat_p: f64,
    conn: Backend,
    map: HalfEdgeMap,
    open_count: usize,
    t: u64,
}

impl Chain {
    /// Chain on `g` with boundary `bc` started from `omega`; the backend is
    /// chosen from the vertex count.
    pub fn new(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition, omega: &[bool]) -> Result<Self> {
        Self::with_backend(BackendKind::auto(g.n()), g, p, q, bc, omega)
    }

    pub fn with_backend(
        kind: BackendKind,
        g: &MultiGraph,
        p: f64,
        q: f64,
        bc: &BoundaryCondition,
        omega: &[bool],
    ) -> Result<Self> {
        let map = HalfEdgeMap::Dense((0..g.num_half_edges()).map(|h| g.edge_of_half_edge(h)).collect());
        Self::from_parts(kind, g.n(), &g.endpoint_list(), map, p, q, bc, omega)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        kind: BackendKind,
        n: usize,
        ends: &[(usize, usize)],
        map: HalfEdgeMap,
        p: f64,
        q: f64,
        bc: &BoundaryCondition,
        omega: &[bool],
    ) -> Result<Self> {
        check_p(p)?;
        check_q(q)?;
        let conn = Backend::build_kind(kind, n, ends, bc, omega)?;
        Ok(Chain {
            p,
            q,
            hat_p: p / (q * (1.0 - p) + p),
            conn,
            map,
            open_count: omega.iter().filter(|&&b| b).count(),
            t: 0,
        })
    }

    pub fn all_open(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition) -> Result<Self> {
        Self::new(g, p, q, bc, &vec![true; g.num_edges()])
    }

    pub fn all_closed(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition) -> Result<Self> {
        Self::new(g, p, q, bc, &vec![false; g.num_edges()])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn num_edges(&self) -> usize {
        self.conn.num_edges()
    }

    pub fn is_open(&self, e: usize) -> bool {
        self.conn.is_open(e)
    }

    pub fn open_count(&self) -> usize {
        self.open_count
    }

    pub fn omega(&self) -> Vec<bool> {
        self.conn.omega()
    }

    pub fn connectivity(&mut self) -> &mut Backend {
        &mut self.conn
    }

    /// Heat-bath update of edge `e` with uniform `u`: the edge opens iff
    /// `u ≤ p̂` when it is a cut-edge and `u ≤ p` otherwise. Returns the new
    /// state of `e`.
    pub fn fk_step(&mut self, e: usize, u: f64) -> bool {
        let was = self.conn.is_open(e);
        let (a, b) = self.conn.endpoints(e);
        let open = if self.q == 1.0 || a == b {
            u <= self.p
        } else {
            self.conn.toggle(e, false);
            let threshold = if self.conn.connected(a, b) { self.p } else { self.hat_p };
            u <= threshold
        };
        self.conn.toggle(e, open);
        if open != was {
            if open {
                self.open_count += 1;
            } else {
                self.open_count -= 1;
            }
        }
        open
    }

    /// Applies one update; censored updates only advance the clock.
    /// Returns the updated edge and its new state.
    pub fn apply(&mut self, upd: Update) -> Option<(usize, bool)> {
        self.t += 1;
        let e = self.map.get(upd.half_edge)?;
        Some((e, self.fk_step(e, upd.u)))
    }

    pub fn run(&mut self, stream: &mut UpdateStream, steps: u64) {
        for _ in 0..steps {
            self.apply(stream.next_update());
        }
    }

    /// Runs `steps` updates, adding the post-update state of every edge to
    /// `counts` after each step.
    pub fn run_with_edge_counts(&mut self, stream: &mut UpdateStream, steps: u64, counts: &mut [u64]) {
        let mut current: Vec<bool> = self.omega();
        let open_now = |c: &[bool], counts: &mut [u64]| {
            for (k, &b) in counts.iter_mut().zip(c) {
                *k += b as u64;
            }
        };
        for _ in 0..steps {
            if let Some((e, s)) = self.apply(stream.next_update()) {
                current[e] = s;
            }
            open_now(&current, counts);
        }
    }

    /// Runs `steps` updates and writes `step,edge_index,new_state` rows for
    /// every applied update.
    pub fn run_logged(&mut self, stream: &mut UpdateStream, steps: u64, out: &mut impl Write) -> std::io::Result<()> {
        for _ in 0..steps {
            if let Some((e, s)) = self.apply(stream.next_update()) {
                writeln!(out, "{},{},{}", self.t, e, s as u8)?;
            }
        }
        Ok(())
    }

    /// Clusters of the open edges, ignoring boundary wirings.
    pub fn open_clusters(&self) -> UnionFind {
        let n = self.conn.n();
        let mut uf = UnionFind::new(n);
        for e in 0..self.num_edges() {
            if self.conn.is_open(e) {
                let (a, b) = self.conn.endpoints(e);
                uf.union(a, b);
            }
        }
        uf
    }
}

/// Largest edge count accepted by [`probed_transition_matrix`].
pub const PROBE_EDGE_CAP: usize = 10;

/// Probability that [`Chain::fk_step`] leaves `e` open from the chain's
/// current state, recovered by bisecting on the uniform.
pub fn open_threshold(chain: &Chain, e: usize) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if chain.clone().fk_step(e, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Transition matrix of the chain over bitmask states (bit `e` = edge `e`
/// open), built by probing [`Chain::fk_step`] from every state.
pub fn probed_transition_matrix(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition) -> Result<Vec<Vec<f64>>> {
    let m = g.num_edges();
    if m > PROBE_EDGE_CAP {
        return Err(Error::Size { what: "edges", size: m, cap: PROBE_EDGE_CAP });
    }
    let size = 1usize << m;
    let mut mat = vec![vec![0.0; size]; size];
    for (x, row) in mat.iter_mut().enumerate() {
        let omega: Vec<bool> = (0..m).map(|e| x >> e & 1 == 1).collect();
        let chain = Chain::with_backend(BackendKind::Naive, g, p, q, bc, &omega)?;
        if m == 0 {
            row[0] = 1.0;
        }
        for e in 0..m {
            let open = open_threshold(&chain, e);
            row[x | 1 << e] += open / m as f64;
            row[x & !(1 << e)] += (1.0 - open) / m as f64;
        }
    }
    Ok(mat)
}

/// `ω ≤ ω'` edgewise.
pub fn dominated(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

#[derive(Clone, Debug)]
pub struct CouplingOutcome {
    /// First step after which all chains agree, or `None` within the cap.
    pub coupling_time: Option<u64>,
    pub steps: u64,
    /// Steps at which an initially ordered pair became unordered.
    pub order_violations: u64,
    pub finals: Vec<Vec<bool>>,
}

/// Runs one chain per initial configuration on a single shared stream,
/// stopping at coalescence or after `t_max` steps. Initially ordered pairs
/// are audited for order preservation at every step.
pub fn grand_coupling_run(
    g: &MultiGraph,
    p: f64,
    q: f64,
    bc: &BoundaryCondition,
    inits: &[Vec<bool>],
    t_max: u64,
    seed: u64,
) -> Result<CouplingOutcome> {
    let mut stream = UpdateStream::for_graph(g, seed)?;
    let mut chains = inits
        .iter()
        .map(|w| Chain::new(g, p, q, bc, w))
        .collect::<Result<Vec<_>>>()?;
    let m = g.num_edges();
    let ordered: Vec<(usize, usize)> = (0..inits.len())
        .flat_map(|i| (0..inits.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && dominated(&inits[i], &inits[j]))
        .collect();
    let agree = |chains: &[Chain], e: usize| chains.iter().all(|c| c.is_open(e) == chains[0].is_open(e));
    let mut disagree = (0..m).filter(|&e| !agree(&chains, e)).count();
    let mut violations = 0;
    let mut t = 0;
    let mut coupled = (disagree == 0).then_some(0);
    while coupled.is_none() && t < t_max {
        let upd = stream.next_update();
        t += 1;
        let e = g.edge_of_half_edge(upd.half_edge);
        let before = agree(&chains, e);
        for c in chains.iter_mut() {
            c.apply(upd);
        }
        let after = agree(&chains, e);
        match (before, after) {
            (false, true) => disagree -= 1,
            (true, false) => disagree += 1,
            _ => {}
        }
        if ordered.iter().any(|&(i, j)| chains[i].is_open(e) && !chains[j].is_open(e)) {
            violations += 1;
        }
        if disagree == 0 {
            coupled = Some(t);
        }
    }
    Ok(CouplingOutcome {
        coupling_time: coupled,
        steps: t,
        order_violations: violations,
        finals: chains.iter().map(Chain::omega).collect(),
    })
}

/// `⌈200·n·ln n⌉`.
pub fn default_cap(n: usize) -> u64 {
    (200.0 * n as f64 * (n.max(2) as f64).ln()).ceil() as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSummary {
    /// Per-rep coupling time; censored reps hold the cap.
    pub times: Vec<u64>,
    pub censored: Vec<bool>,
    pub median: f64,
    pub mean: f64,
    pub max: u64,
    pub violations: u64,
}

impl CouplingSummary {
    pub fn censored_count(&self) -> usize {
        self.censored.iter().filter(|&&c| c).count()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Coupling time of the all-closed and all-open chains, repeated `reps`
/// times; rep `r` uses stream seed `derive_seed(seed, r)`. Reps run in
/// parallel and are returned in rep order.
pub fn coupling_time_estimate(
    g: &MultiGraph,
    p: f64,
    q: f64,
    bc: &BoundaryCondition,
    reps: usize,
    seed: u64,
    cap: u64,
) -> Result<CouplingSummary> {
    if q < 1.0 {
        return Err(Error::Parameter(format!("q = {q} < 1 has no monotone coupling")));
    }
    let m = g.num_edges();
    let inits = [vec![false; m], vec![true; m]];
    let outcomes = (0..reps)
        .into_par_iter()
        .map(|r| grand_coupling_run(g, p, q, bc, &inits, cap, derive_seed(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<u64> = outcomes.iter().map(|o| o.coupling_time.unwrap_or(cap)).collect();
    let censored = outcomes.iter().map(|o| o.coupling_time.is_none()).collect();
    let as_f: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    Ok(CouplingSummary {
        median: median(&as_f),
        mean: as_f.iter().sum::<f64>() / as_f.len().max(1) as f64,
        max: times.iter().copied().max().unwrap_or(0),
        violations: outcomes.iter().map(|o| o.order_violations).sum(),
        times,
        censored,
    })
}

/// An edge of a partially known graph: global half-edge ids and global
/// endpoint vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalEdge {
    pub halves: [usize; 2],
    pub ends: (usize, usize),
}

impl LocalEdge {
    pub fn of(g: &MultiGraph, e: usize) -> Self {
        let edge = g.edge(e);
        LocalEdge { halves: [g.half_edge_index(edge.a), g.half_edge_index(edge.b)], ends: edge.endpoints() }
    }
}

/// The censored chain on an edge set `A` with every vertex of `boundary`
/// wired together, started all open. Updates to half-edges outside `A`
/// are ignored.
#[derive(Clone, Debug)]
pub struct LocalizedChain {
    vertices: Vec<usize>,
    chain: Chain,
}

impl LocalizedChain {
    pub fn new(edges: &[LocalEdge], boundary: &[usize], p: f64, q: f64) -> Result<Self> {
        let mut vertices: Vec<usize> = edges.iter().flat_map(|e| [e.ends.0, e.ends.1]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        let local = |v: usize| vertices.binary_search(&v).ok();
        let ends: Vec<(usize, usize)> = edges
            .iter()
            .map(|e| (local(e.ends.0).expect("own vertex"), local(e.ends.1).expect("own vertex")))
            .collect();
        let wired: Vec<usize> = boundary.iter().filter_map(|&v| local(v)).collect();
        let mut map = HashMap::with_capacity(2 * edges.len());
        for (i, e) in edges.iter().enumerate() {
            map.insert(e.halves[0], i);
            map.insert(e.halves[1], i);
        }
        let chain = Chain::from_parts(
            BackendKind::auto(vertices.len()),
            vertices.len(),
            &ends,
            HalfEdgeMap::Sparse(map),
            p,
            q,
            &BoundaryCondition::wired(&wired),
            &vec![true; edges.len()],
        )?;
        Ok(LocalizedChain { vertices, chain })
    }

    /// Global vertex ids of `V(A)`, sorted.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn apply(&mut self, upd: Update) -> Option<(usize, bool)> {
        self.chain.apply(upd)
    }

    pub fn run(&mut self, stream: &mut UpdateStream, steps: u64) {
        self.chain.run(stream, steps)
    }

    pub fn t(&self) -> u64 {
        self.chain.t()
    }

    /// Configuration on `A`, in the order the edges were given.
    pub fn omega(&self) -> Vec<bool> {
        self.chain.omega()
    }
}

/// `∂A`: vertices of `V(A)` incident to some edge of `g` outside `A`.
pub fn edge_set_boundary(g: &MultiGraph, a: &[usize]) -> Vec<usize> {
    let mut deg: HashMap<usize, usize> = HashMap::new();
    for &e in a {
        let (x, y) = g.endpoints(e);
        *deg.entry(x).or_default() += 1;
        *deg.entry(y).or_default() += 1;
    }
    let mut out: Vec<usize> = deg.into_iter().filter(|&(v, k)| k < g.degree(v)).map(|(v, _)| v).collect();
    out.sort_unstable();
    out
}

/// `X¹_{A,t}`: runs the censored chain on `A ⊆ E(g)` with `∂A` wired for
/// `t` steps of `stream` and returns its configuration on `A`.
pub fn censored_localized_chain(
    g: &MultiGraph,
    a: &[usize],
    p: f64,
    q: f64,
    stream: &mut UpdateStream,
    t: u64,
) -> Result<Vec<bool>> {
    if a.is_empty() {
        stream.skip(t);
        return Ok(Vec::new());
    }
    let edges: Vec<LocalEdge> = a.iter().map(|&e| LocalEdge::of(g, e)).collect();
    let mut chain = LocalizedChain::new(&edges, &edge_set_boundary(g, a), p, q)?;
    chain.run(stream, t);
    Ok(chain.omega())
}

/// Spins take values `0..q`.
pub type SpinConfig = Vec<u32>;

pub fn integer_q(q: f64) -> Result<u32> {
    if q >= 1.0 && q.fract() == 0.0 && q <= u32::MAX as f64 {
        Ok(q as u32)
    } else {
        Err(Error::Parameter(format!("q = {q} must be a positive integer for spin dynamics")))
    }
}

/// Edwards–Sokal map: an independent uniform spin for each open cluster.
pub fn potts_from_rc(g: &MultiGraph, omega: &[bool], q: f64, rng: &mut SimRng) -> Result<SpinConfig> {
    let q = integer_q(q)?;
    let mut uf = UnionFind::new(g.n());
    for (e, &(a, b)) in g.endpoint_list().iter().enumerate() {
        if omega[e] {
            uf.union(a, b);
        }
    }
    let mut colour: HashMap<usize, u32> = HashMap::new();
    Ok((0..g.n())
        .map(|v| {
            let r = uf.find(v);
            *colour.entry(r).or_insert_with(|| rng.gen_range(0..q))
        })
        .collect())
}

/// Percolates monochromatic edges with probability `p`.
pub fn rc_from_potts(g: &MultiGraph, spins: &[u32], p: f64, rng: &mut SimRng) -> Vec<bool> {
    g.endpoint_list()
        .iter()
        .map(|&(a, b)| {
            let u: f64 = rng.gen();
            spins[a] == spins[b] && u < p
        })
        .collect()
}

/// One Swendsen–Wang step.
pub fn sw_step(g: &MultiGraph, spins: &[u32], p: f64, q: f64, rng: &mut SimRng) -> Result<SpinConfig> {
    check_p(p)?;
    integer_q(q)?;
    let omega = rc_from_potts(g, spins, p, rng);
    potts_from_rc(g, &omega, q, rng)
}

/// Swendsen–Wang chain with its own generator.
#[derive(Clone, Debug)]
pub struct SwChain {
    graph: MultiGraph,
    p: f64,
    q: f64,
    spins: SpinConfig,
    rng: SimRng,
}

impl SwChain {
    pub fn new(g: &MultiGraph, p: f64, q: f64, seed: u64) -> Result<Self> {
        check_p(p)?;
        integer_q(q)?;
        Ok(SwChain { graph: g.clone(), p, q, spins: vec![0; g.n()], rng: rng_from_seed(seed) })
    }

    pub fn spins(&self) -> &[u32] {
        &self.spins
    }

    pub fn step(&mut self) {
        self.spins = sw_step(&self.graph, &self.spins, self.p, self.q, &mut self.rng).expect("validated parameters");
    }
}

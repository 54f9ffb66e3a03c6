//! Multigraphs built from half-edge matchings.
//!
//! Every vertex owns a fixed number of half-edges ("slots"); an edge is an
//! unordered pair of half-edges. A Δ-regular multigraph from the
//! configuration model is a perfect matching of the `Δn` half-edges, so
//! self-loops and parallel edges are allowed. Graphs built from an explicit
//! edge list (paths, trees, small test graphs) use the same representation
//! with slots assigned in order of appearance.
//!
//! Half-edges also carry a global index (`offset[v] + slot`). Update streams
//! draw a uniform half-edge and act on the edge that contains it, which picks
//! edges uniformly and keeps chains on different graphs over the same
//! vertex set aligned.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::unionfind::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub vertex: usize,
    pub slot: usize,
}

impl HalfEdge {
    pub fn new(vertex: usize, slot: usize) -> Self {
        HalfEdge { vertex, slot }
    }
}

/// An unordered pair of half-edges, stored with `a <= b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: HalfEdge,
    pub b: HalfEdge,
}

impl Edge {
    pub fn new(x: HalfEdge, y: HalfEdge) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.a.vertex, self.b.vertex)
    }

    pub fn is_loop(&self) -> bool {
        self.a.vertex == self.b.vertex
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    regular: Option<usize>,
    degree: Vec<usize>,
    offset: Vec<usize>,
    edges: Vec<Edge>,
    half_to_edge: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl MultiGraph {
    /// Builds the graph of a perfect matching on the half-edges of `n`
    /// vertices of degree `delta`. Edges are stored in sorted order.
    pub fn from_matching(n: usize, delta: usize, pairs: &[(HalfEdge, HalfEdge)]) -> Result<Self> {
        if (n * delta) % 2 != 0 {
            return Err(Error::OddHalfEdges(n * delta));
        }
        if pairs.len() * 2 != n * delta {
            return Err(Error::Usage(format!(
                "matching has {} pairs, expected {}",
                pairs.len(),
                n * delta / 2
            )));
        }
        let mut seen = vec![false; n * delta];
        let mut edges = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            for h in [x, y] {
                if h.vertex >= n || h.slot >= delta {
                    return Err(Error::Usage(format!("half-edge {h:?} out of range")));
                }
                let id = h.vertex * delta + h.slot;
                if seen[id] {
                    return Err(Error::Usage(format!("half-edge {h:?} matched twice")));
                }
                seen[id] = true;
            }
            edges.push(Edge::new(x, y));
        }
        edges.sort_unstable();
        Ok(Self::assemble(n, Some(delta), vec![delta; n], edges))
    }

    /// Builds a graph from vertex pairs, keeping the given edge order.
    /// Slots are assigned per vertex in order of appearance; a self-loop
    /// takes two consecutive slots.
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut next_slot = vec![0usize; n];
        let mut edges = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::Usage(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            let hu = HalfEdge::new(u, next_slot[u]);
            next_slot[u] += 1;
            let hv = HalfEdge::new(v, next_slot[v]);
            next_slot[v] += 1;
            edges.push(Edge::new(hu, hv));
        }
        let regular = match next_slot.first() {
            Some(&d) if next_slot.iter().all(|&x| x == d) => Some(d),
            _ => None,
        };
        Ok(Self::assemble(n, regular, next_slot, edges))
    }

    fn assemble(n: usize, regular: Option<usize>, degree: Vec<usize>, edges: Vec<Edge>) -> Self {
        let mut offset = Vec::with_capacity(n + 1);
        let mut acc = 0;
        for &d in &degree {
            offset.push(acc);
            acc += d;
        }
        offset.push(acc);
        let mut half_to_edge = vec![usize::MAX; acc];
        let mut adj: Vec<Vec<(usize, usize)>> = degree.iter().map(|&d| vec![(0, 0); d]).collect();
        for (i, e) in edges.iter().enumerate() {
            half_to_edge[offset[e.a.vertex] + e.a.slot] = i;
            half_to_edge[offset[e.b.vertex] + e.b.slot] = i;
            adj[e.a.vertex][e.a.slot] = (e.b.vertex, i);
            adj[e.b.vertex][e.b.slot] = (e.a.vertex, i);
        }
        MultiGraph { n, regular, degree, offset, edges, half_to_edge, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The common degree, if every vertex has the same degree.
    pub fn delta(&self) -> Option<usize> {
        self.regular
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.offset[self.n]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e].endpoints()
    }

    /// Endpoint pairs of all edges, in edge order.
    pub fn endpoint_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(Edge::endpoints).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    /// `(neighbour, edge index)` for every slot of `v`, in slot order.
    /// A self-loop appears twice.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn half_edge_index(&self, h: HalfEdge) -> usize {
        self.offset[h.vertex] + h.slot
    }

    pub fn edge_of_half_edge(&self, h: usize) -> usize {
        self.half_to_edge[h]
    }

    pub fn has_self_loop(&self) -> bool {
        self.edges.iter().any(Edge::is_loop)
    }

    pub fn has_parallel_edges(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.edges.len());
        self.edges.iter().filter(|e| !e.is_loop()).any(|e| {
            let (u, v) = e.endpoints();
            !seen.insert((u.min(v), u.max(v)))
        })
    }

    pub fn is_simple(&self) -> bool {
        !self.has_self_loop() && !self.has_parallel_edges()
    }

    /// Graph distance from `v` to every vertex (`usize::MAX` if unreachable).
    pub fn distances_from(&self, v: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[v] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Applies a vertex permutation (`perm[old] = new`), keeping slots.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Usage("permutation length differs from n".into()));
        }
        let mut degree = vec![0; self.n];
        for v in 0..self.n {
            degree[perm[v]] = self.degree[v];
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| {
                Edge::new(
                    HalfEdge::new(perm[e.a.vertex], e.a.slot),
                    HalfEdge::new(perm[e.b.vertex], e.b.slot),
                )
            })
            .collect();
        if self.regular.is_some() {
            edges.sort_unstable();
        }
        Ok(Self::assemble(self.n, self.regular, degree, edges))
    }

    /// Text form: a header `rrg n delta`, then one sorted line `u su v sv`
    /// per edge. Only regular graphs can be written.
    pub fn to_text(&self) -> Result<String> {
        let delta = self
            .regular
            .ok_or_else(|| Error::Usage("only regular graphs have a text form".into()))?;
        let mut sorted = self.edges.clone();
        sorted.sort_unstable();
        let mut out = format!("rrg {} {}\n", self.n, delta);
        for e in &sorted {
            let _ = writeln!(out, "{} {} {} {}", e.a.vertex, e.a.slot, e.b.vertex, e.b.slot);
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty input".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "rrg" {
            return Err(Error::Parse { line: 1, msg: "expected header `rrg n delta`".into() });
        }
        let parse = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse { line, msg: format!("{s:?}: {e}") })
        };
        let n = parse(fields[1], 1)?;
        let delta = parse(fields[2], 1)?;
        let mut pairs = Vec::new();
        for (i, line) in lines {
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|s| parse(s, i + 1))
                .collect::<Result<_>>()?;
            if nums.len() != 4 {
                return Err(Error::Parse { line: i + 1, msg: "expected `u su v sv`".into() });
            }
            pairs.push((HalfEdge::new(nums[0], nums[1]), HalfEdge::new(nums[2], nums[3])));
        }
        Self::from_matching(n, delta, &pairs)
    }
}

/// Incremental uniform matching of the half-edges of `n` degree-`delta`
/// vertices. Each call to [`RevealCursor::reveal_next`] pairs a chosen
/// half-edge with a uniformly random unmatched one, so any adaptive choice
/// of targets yields a configuration-model graph.
#[derive(Clone, Debug)]
pub struct RevealCursor {
    n: usize,
    delta: usize,
    partner: Vec<usize>,
    unmatched: Vec<usize>,
    position: Vec<usize>,
    revealed: Vec<Edge>,
    next_canonical: usize,
    rng: SimRng,
}

const UNMATCHED: usize = usize::MAX;

impl RevealCursor {
    pub fn new(n: usize, delta: usize, seed: u64) -> Result<Self> {
        if n == 0 || delta == 0 {
            return Err(Error::Parameter("need n >= 1 and delta >= 1".into()));
        }
        if (n * delta) % 2 != 0 {
            return Err(Error::OddHalfEdges(n * delta));
        }
        let total = n * delta;
        Ok(RevealCursor {
            n,
            delta,
            partner: vec![UNMATCHED; total],
            unmatched: (0..total).collect(),
            position: (0..total).collect(),
            revealed: Vec::with_capacity(total / 2),
            next_canonical: 0,
            rng: rng_from_seed(seed),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    fn id(&self, h: HalfEdge) -> usize {
        h.vertex * self.delta + h.slot
    }

    fn half(&self, id: usize) -> HalfEdge {
        HalfEdge::new(id / self.delta, id % self.delta)
    }

    fn remove(&mut self, id: usize) {
        let pos = self.position[id];
        let last = *self.unmatched.last().expect("nonempty");
        self.unmatched.swap_remove(pos);
        if last != id {
            self.position[last] = pos;
        }
        self.position[id] = UNMATCHED;
    }

    fn check(&self, h: HalfEdge) -> Result<usize> {
        if h.vertex >= self.n || h.slot >= self.delta {
            return Err(Error::Usage(format!("half-edge {h:?} out of range")));
        }
        let id = self.id(h);
        if self.partner[id] != UNMATCHED {
            return Err(Error::Usage(format!("half-edge {h:?} is already matched")));
        }
        Ok(id)
    }

    /// Matches `target` to a uniformly random other unmatched half-edge.
    pub fn reveal_next(&mut self, target: HalfEdge) -> Result<Edge> {
        let id = self.check(target)?;
        self.remove(id);
        let k = self.rng.gen_range(0..self.unmatched.len());
        let other = self.unmatched[k];
        self.remove(other);
        Ok(self.record(id, other))
    }

    /// Forces a pair into the matching without consuming randomness.
    pub fn force_pair(&mut self, x: HalfEdge, y: HalfEdge) -> Result<Edge> {
        let ix = self.check(x)?;
        let iy = self.check(y)?;
        if ix == iy {
            return Err(Error::Usage("cannot pair a half-edge with itself".into()));
        }
        self.remove(ix);
        self.remove(iy);
        Ok(self.record(ix, iy))
    }

    fn record(&mut self, x: usize, y: usize) -> Edge {
        self.partner[x] = y;
        self.partner[y] = x;
        let e = Edge::new(self.half(x), self.half(y));
        self.revealed.push(e);
        e
    }

    pub fn partner(&self, h: HalfEdge) -> Option<HalfEdge> {
        match self.partner[self.id(h)] {
            UNMATCHED => None,
            id => Some(self.half(id)),
        }
    }

    pub fn is_matched(&self, h: HalfEdge) -> bool {
        self.partner[self.id(h)] != UNMATCHED
    }

    /// Edges in the order they were revealed.
    pub fn revealed(&self) -> &[Edge] {
        &self.revealed
    }

    pub fn unmatched_count(&self) -> usize {
        self.unmatched.len()
    }

    pub fn is_complete(&self) -> bool {
        self.unmatched.is_empty()
    }

    /// The smallest unmatched half-edge in `(vertex, slot)` order.
    pub fn next_canonical(&mut self) -> Option<HalfEdge> {
        while self.next_canonical < self.partner.len() && self.partner[self.next_canonical] != UNMATCHED {
            self.next_canonical += 1;
        }
        (self.next_canonical < self.partner.len()).then(|| self.half(self.next_canonical))
    }

    /// Finishes the matching in canonical order and returns the graph.
    pub fn complete(mut self) -> MultiGraph {
        while let Some(h) = self.next_canonical() {
            self.reveal_next(h).expect("canonical target is unmatched");
        }
        let pairs: Vec<(HalfEdge, HalfEdge)> = self.revealed.iter().map(|e| (e.a, e.b)).collect();
        MultiGraph::from_matching(self.n, self.delta, &pairs).expect("complete matching")
    }
}

/// Uniform configuration-model multigraph; deterministic in `seed`.
pub fn sample_cm(n: usize, delta: usize, seed: u64) -> Result<MultiGraph> {
    Ok(RevealCursor::new(n, delta, seed)?.complete())
}

/// Rejection-samples a simple Δ-regular graph. Attempt `i` uses the
/// configuration-model seed `derive_seed(seed, i)`. Returns the graph and the
/// number of attempts used.
pub fn sample_simple_counted(
    n: usize,
    delta: usize,
    seed: u64,
    max_tries: usize,
) -> Result<(MultiGraph, usize)> {
    for attempt in 0..max_tries {
        let g = sample_cm(n, delta, derive_seed(seed, attempt as u64))?;
        if g.is_simple() {
            return Ok((g, attempt + 1));
        }
    }
    Err(Error::RetryExhausted { attempts: max_tries })
}

pub fn sample_simple(n: usize, delta: usize, seed: u64, max_tries: usize) -> Result<MultiGraph> {
    sample_simple_counted(n, delta, seed, max_tries).map(|(g, _)| g)
}

/// A breadth-first ball. `edges` holds indices of the edges with both
/// endpoints inside (minus any excluded edges for [`ball_out`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub center: usize,
    pub radius: usize,
    pub vertices: Vec<usize>,
    pub distance: HashMap<usize, usize>,
    pub edges: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl Ball {
    pub fn contains(&self, v: usize) -> bool {
        self.distance.contains_key(&v)
    }
}

fn grow_ball(g: &MultiGraph, v: usize, r: usize, excluded: &HashSet<usize>) -> Ball {
    let mut distance = HashMap::from([(v, 0usize)]);
    let mut order = vec![v];
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        let du = distance[&u];
        if du == r {
            continue;
        }
        for &(w, e) in g.neighbors(u) {
            if u == v && excluded.contains(&e) {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(slot) = distance.entry(w) {
                slot.insert(du + 1);
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let mut edges: Vec<usize> = order
        .iter()
        .flat_map(|&u| g.neighbors(u).iter().map(move |&(w, e)| (u, w, e)))
        .filter(|&(u, w, e)| {
            distance.contains_key(&w) && !((u == v || w == v) && excluded.contains(&e))
        })
        .map(|(_, _, e)| e)
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let mut vertices = order;
    vertices.sort_unstable();
    let mut boundary: Vec<usize> = vertices.iter().copied().filter(|w| distance[w] == r).collect();
    boundary.sort_unstable();
    Ball { center: v, radius: r, vertices, distance, edges, boundary }
}

/// Ball of radius `r` around `v`: every vertex within distance `r`, and
/// every edge with both endpoints in the ball.
pub fn ball(g: &MultiGraph, v: usize, r: usize) -> Ball {
    grow_ball(g, v, r, &HashSet::new())
}

/// Ball of radius `r` around `v` in the graph with the edges of `a` that
/// are incident to `v` removed.
pub fn ball_out(g: &MultiGraph, v: usize, r: usize, a: &[usize]) -> Ball {
    let excluded: HashSet<usize> = a
        .iter()
        .copied()
        .filter(|&e| {
            let (x, y) = g.endpoints(e);
            x == v || y == v
        })
        .collect();
    grow_ball(g, v, r, &excluded)
}

/// Cycle rank `|E| - |V| + #components` of the subgraph spanned by the
/// given vertices and edges: the fewest edge deletions leaving a forest.
pub fn cycle_rank(g: &MultiGraph, vertices: &[usize], edges: &[usize]) -> usize {
    let index: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(vertices.len());
    for &e in edges {
        let (x, y) = g.endpoints(e);
        uf.union(index[&x], index[&y]);
    }
    edges.len() + uf.count() - vertices.len()
}

pub fn tree_excess(g: &MultiGraph, b: &Ball) -> usize {
    cycle_rank(g, &b.vertices, &b.edges)
}

/// True iff every radius-`r` ball becomes a tree after deleting at most `l`
/// edges.
pub fn is_lr_treelike(g: &MultiGraph, l: usize, r: usize) -> bool {
    (0..g.n()).all(|v| tree_excess(g, &ball(g, v, r)) <= l)
}

/// Largest tree excess over all radius-`r` balls.
pub fn max_tree_excess(g: &MultiGraph, r: usize) -> usize {
    (0..g.n()).map(|v| tree_excess(g, &ball(g, v, r))).max().unwrap_or(0)
}

/// Small named graphs used by tests, the CLI and the guide.
pub mod named {
    use super::MultiGraph;

    pub fn path(n: usize) -> MultiGraph {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        MultiGraph::from_edge_list(n, &pairs).expect("valid path")
    }

    pub fn cycle(n: usize) -> MultiGraph {
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        MultiGraph::from_edge_list(n, &pairs).expect("valid cycle")
    }

    pub fn triangle() -> MultiGraph {
        cycle(3)
    }

    pub fn single_edge() -> MultiGraph {
        MultiGraph::from_edge_list(2, &[(0, 1)]).expect("valid edge")
    }

    pub fn complete(n: usize) -> MultiGraph {
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                pairs.push((u, v));
            }
        }
        MultiGraph::from_edge_list(n, &pairs).expect("valid complete graph")
    }

    /// K4 with the edge {2, 3} removed.
    pub fn k4_minus_edge() -> MultiGraph {
        MultiGraph::from_edge_list(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).expect("valid")
    }

    /// Two vertices joined by a double edge, a pendant edge and a self-loop.
    pub fn double_edge_with_loop() -> MultiGraph {
        MultiGraph::from_edge_list(3, &[(0, 1), (0, 1), (1, 2), (2, 2)]).expect("valid")
    }

    pub fn by_name(name: &str) -> Option<MultiGraph> {
        Some(match name {
            "edge" | "single-edge" => single_edge(),
            "triangle" => triangle(),
            "k4" => complete(4),
            "k4-minus-edge" => k4_minus_edge(),
            "multi" | "double-edge-loop" => double_edge_with_loop(),
            _ => {
                if let Some(k) = name.strip_prefix("path") {
                    path(k.parse::<usize>().ok()? + 1)
                } else if let Some(k) = name.strip_prefix("cycle") {
                    cycle(k.parse().ok()?)
                } else {
                    return None;
                }
            }
        })
    }
}

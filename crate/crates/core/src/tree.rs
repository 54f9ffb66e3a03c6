//! Wired-tree recursion, the uniqueness threshold and complete trees.
//!
//! With `μ = p/q + 1 − p`, the probability `φ_h` that the root of a
//! `d`-ary tree of height `h` with wired leaves is connected to the leaves
//! satisfies `φ_{h+1} = f(φ_h)`, `φ_0 = 1`, where
//!
//! ```text
//! f(x) = [(μ + p(1 − 1/q)x)^d − (μ − (p/q)x)^d] / [(μ + p(1 − 1/q)x)^d + (q − 1)(μ − (p/q)x)^d]
//! ```
//!
//! The numerator is evaluated as `p·x·Σ a^{d−1−i} b^i`, so `f(x)/x` is
//! computed without cancellation and `f(x)/x → d·p̂` as `x → 0`.

use crate::boundary::BoundaryCondition;
use crate::error::{check_p, check_q, Error, Result};
use crate::graphs::MultiGraph;

/// `p̂ = p / (q(1 − p) + p)`.
pub fn hat_p(p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    check_q(q)?;
    Ok(p / (q * (1.0 - p) + p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub p: f64,
    pub q: f64,
    pub delta: usize,
    pub d: usize,
    pub mu: f64,
}

impl TreeParams {
    pub fn new(p: f64, q: f64, delta: usize) -> Result<Self> {
        check_p(p)?;
        check_q(q)?;
        if delta < 2 {
            return Err(Error::Parameter(format!("delta = {delta} must be at least 2")));
        }
        Ok(TreeParams { p, q, delta, d: delta - 1, mu: p / q + 1.0 - p })
    }

    pub fn hat_p(&self) -> f64 {
        self.p / (self.q * (1.0 - self.p) + self.p)
    }

    /// `d·p̂`, the decay ratio of `φ_h` below the threshold.
    pub fn d_hat_p(&self) -> f64 {
        self.d as f64 * self.hat_p()
    }

    fn ab(&self, x: f64) -> (f64, f64) {
        let (p, q) = (self.p, self.q);
        (self.mu + p * (1.0 - 1.0 / q) * x, self.mu - p / q * x)
    }

    /// `F_k(x) / x` for a root with `k` children, each connected to the
    /// wired leaves with probability `x`; `F_d = f`.
    pub fn ratio_with_arity(&self, x: f64, k: usize) -> f64 {
        let (a, b) = self.ab(x);
        let mut sum = 0.0;
        let mut term = a.powi(k as i32 - 1);
        for _ in 0..k {
            sum += term;
            term *= b / a;
        }
        let den = a.powi(k as i32) + (self.q - 1.0) * b.powi(k as i32);
        self.p * sum / den
    }

    pub fn f_with_arity(&self, x: f64, k: usize) -> f64 {
        x * self.ratio_with_arity(x, k)
    }

    /// `f(x) / x`.
    pub fn ratio(&self, x: f64) -> f64 {
        self.ratio_with_arity(x, self.d)
    }

    pub fn f(&self, x: f64) -> f64 {
        self.f_with_arity(x, self.d)
    }
}

/// The recursion map `f`.
pub fn f_recursion(x: f64, params: &TreeParams) -> f64 {
    params.f(x)
}

/// `φ_h`: `h`-fold iterate of `f` from `φ_0 = 1`.
pub fn phi(h: usize, params: &TreeParams) -> f64 {
    (0..h).fold(1.0, |x, _| params.f(x))
}

/// `ln φ_h`, iterated as `y ← y + ln(f(e^y)/e^y)` so it never underflows.
pub fn log_phi(h: usize, params: &TreeParams) -> f64 {
    (0..h).fold(0.0, |y, _| y + params.ratio(y.exp()).ln())
}

/// `φ_{h+1} / φ_h`.
pub fn decay_rate(params: &TreeParams, h: usize) -> f64 {
    params.ratio(log_phi(h, params).exp())
}

/// Probability that the root of the `Δ`-regular tree `T_h` with wired
/// leaves is connected to them: the root has `Δ` children, each the root
/// of a `d`-ary tree of height `h − 1`.
pub fn regular_root_connectivity(h: usize, params: &TreeParams) -> f64 {
    if h == 0 {
        return 1.0;
    }
    params.f_with_arity(phi(h - 1, params), params.delta)
}

/// Whether `f` has a fixed point in `(0, 1]`, i.e. `sup_x f(x)/x ≥ 1`.
pub fn has_positive_fixed_point(params: &TreeParams) -> bool {
    sup_ratio(params) >= 1.0
}

/// `sup_{x ∈ (0, 1]} f(x)/x` by a log-spaced and linear grid followed by a
/// golden-section refinement around the best grid point.
pub fn sup_ratio(params: &TreeParams) -> f64 {
    let mut grid: Vec<f64> = (0..=240).map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / 240.0)).collect();
    grid.extend((1..=400).map(|i| i as f64 / 400.0));
    grid.sort_by(f64::total_cmp);
    let (best_i, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, params.ratio(x)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if params.ratio(c) >= params.ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    [params.ratio(grid[best_i]), params.ratio(0.5 * (a + b)), params.ratio(0.0)]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Extinction by iteration: `φ_{h_max} < eps`.
pub fn extinct_by_iteration(params: &TreeParams, h_max: usize, eps: f64) -> bool {
    log_phi(h_max, params) < eps.ln()
}

/// The uniqueness threshold `p_u(q, Δ)`: bisection in `p` on whether the
/// wired-tree recursion has a positive fixed point.
pub fn p_u(q: f64, delta: usize, tol: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q = {q} must be at least 1")));
    }
    if delta < 3 {
        return Err(Error::Parameter(format!("delta = {delta} must be at least 3")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    let pred = |p: f64| TreeParams::new(p, q, delta).map(|t| has_positive_fixed_point(&t));
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    if pred(lo)? || !pred(hi)? {
        return Err(Error::Bracket(format!("no transition in (0, 1) for q = {q}, delta = {delta}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row `q,delta,p_u,hat_p_at_p_u,d_hat_p` of the threshold table.
pub fn threshold_row(q: f64, delta: usize, tol: f64) -> Result<String> {
    let pu = p_u(q, delta, tol)?;
    let h = hat_p(pu, q)?;
    Ok(format!("{q},{delta},{pu},{h},{}", (delta - 1) as f64 * h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeBoundary {
    Free,
    /// Leaves wired together.
    Wired,
    /// Leaves and root wired together, written `(1,↻)`.
    WiredWithRoot,
}

/// A complete rooted tree with vertices numbered in breadth-first order
/// (root `0`) and edge `i` joining vertex `i + 1` to its parent.
#[derive(Clone, Debug)]
pub struct CompleteTree {
    pub root_children: usize,
    pub children: usize,
    pub height: usize,
    pub graph: MultiGraph,
    pub bc: BoundaryCondition,
    pub depth: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub leaves: Vec<usize>,
}

impl CompleteTree {
    /// Edge joining `v` to its parent.
    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        v.checked_sub(1)
    }

    /// Edges on the path from the root to `v`, root side first.
    pub fn path_edges(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = v;
        while let Some(p) = self.parent[x] {
            out.push(x - 1);
            x = p;
        }
        out.reverse();
        out
    }

    /// Edges incident to the root.
    pub fn root_edges(&self) -> Vec<usize> {
        (0..self.root_children).collect()
    }

    /// Index of the root subtree containing `v` (`None` for the root).
    pub fn branch(&self, v: usize) -> Option<usize> {
        self.path_edges(v).first().copied()
    }
}

fn build_tree(root_children: usize, children: usize, h: usize, tag: TreeBoundary) -> Result<CompleteTree> {
    if h == 0 {
        return Err(Error::Parameter("tree height must be at least 1".into()));
    }
    let mut depth = vec![0usize];
    let mut parent = vec![None];
    let mut pairs = Vec::new();
    let mut level = vec![0usize];
    for dep in 1..=h {
        let k = if dep == 1 { root_children } else { children };
        let mut next = Vec::with_capacity(level.len() * k);
        for &u in &level {
            for _ in 0..k {
                let v = depth.len();
                depth.push(dep);
                parent.push(Some(u));
                pairs.push((u, v));
                next.push(v);
            }
        }
        level = next;
    }
    let graph = MultiGraph::from_edge_list(depth.len(), &pairs)?;
    let leaves = level;
    let bc = match tag {
        TreeBoundary::Free => BoundaryCondition::free(),
        TreeBoundary::Wired => BoundaryCondition::wired(&leaves),
        TreeBoundary::WiredWithRoot => {
            let mut all = leaves.clone();
            all.push(0);
            BoundaryCondition::wired(&all)
        }
    };
    Ok(CompleteTree { root_children, children, height: h, graph, bc, depth, parent, leaves })
}

/// The `Δ`-regular tree `T_h`: every internal vertex, root included, has
/// degree `Δ`.
pub fn build_complete_tree(delta: usize, h: usize, tag: TreeBoundary) -> Result<CompleteTree> {
    if delta < 2 {
        return Err(Error::Parameter(format!("delta = {delta} must be at least 2")));
    }
    build_tree(delta, delta - 1, h, tag)
}

/// The `d`-ary tree of height `h`: every internal vertex has `d` children.
pub fn build_dary_tree(d: usize, h: usize, tag: TreeBoundary) -> Result<CompleteTree> {
    if d < 1 {
        return Err(Error::Parameter("d must be at least 1".into()));
    }
    build_tree(d, d, h, tag)
}

/// `|E(T_h)| = Δ·Σ_{i≤h} d^{i−1}`.
pub fn tree_edge_count(delta: usize, h: usize) -> usize {
    let d = delta - 1;
    (1..=h).map(|i| delta * d.pow(i as u32 - 1)).sum()
}

/// `|∂T_h| = Δ·d^{h−1}`.
pub fn tree_leaf_count(delta: usize, h: usize) -> usize {
    if h == 0 {
        1
    } else {
        delta * (delta - 1).pow(h as u32 - 1)
    }
}

//! Exact random-cluster quantities on small graphs.
//!
//! Configurations are bitmasks over the edge index: bit `e` set means edge
//! `e` is open. Weights are handled in log space and exponentiated once,
//! after subtracting the maximum.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::boundary::BoundaryCondition;
use crate::connectivity::{Connectivity, NaiveConnectivity};
use crate::error::{check_p, check_q, Error, Result};
use crate::graphs::MultiGraph;
use crate::rng::rng_from_seed;
use crate::unionfind::UnionFind;

pub const TABLE_EDGE_CAP: usize = 24;
pub const MATRIX_EDGE_CAP: usize = 14;

/// Number of components of `(V, ω)` with the classes of `bc` identified.
pub fn component_count(g: &MultiGraph, omega: &[bool], bc: &BoundaryCondition) -> Result<usize> {
    let conn = NaiveConnectivity::build(g.n(), &g.endpoint_list(), bc, omega)?;
    Ok(conn.component_count())
}

/// `|ω| ln p + (|E| - |ω|) ln(1 - p) + c(ω; ξ) ln q`.
pub fn log_weight(g: &MultiGraph, omega: &[bool], p: f64, q: f64, bc: &BoundaryCondition) -> Result<f64> {
    check_p(p)?;
    check_q(q)?;
    let k = omega.iter().filter(|&&b| b).count();
    let c = component_count(g, omega, bc)?;
    Ok(k as f64 * p.ln() + (omega.len() - k) as f64 * (1.0 - p).ln() + c as f64 * q.ln())
}

/// Unnormalized random-cluster weight of `ω`.
pub fn weight(g: &MultiGraph, omega: &[bool], p: f64, q: f64, bc: &BoundaryCondition) -> Result<f64> {
    log_weight(g, omega, p, q, bc).map(f64::exp)
}

pub fn mask_to_omega(mask: usize, m: usize) -> Vec<bool> {
    (0..m).map(|e| mask >> e & 1 == 1).collect()
}

pub fn omega_to_mask(omega: &[bool]) -> usize {
    omega.iter().enumerate().filter(|(_, &b)| b).map(|(e, _)| 1 << e).sum()
}

/// Component counts of every configuration, indexed by bitmask.
fn all_component_counts(g: &MultiGraph, bc: &BoundaryCondition) -> Vec<u32> {
    let ends = g.endpoint_list();
    let ghosts = bc.ghost_edges();
    let mut base = UnionFind::new(g.n());
    for &(a, b) in &ghosts {
        base.union(a, b);
    }
    (0..1usize << ends.len())
        .map(|mask| {
            let mut uf = base.clone();
            for (e, &(a, b)) in ends.iter().enumerate() {
                if mask >> e & 1 == 1 {
                    uf.union(a, b);
                }
            }
            uf.count() as u32
        })
        .collect()
}

/// The full random-cluster distribution of a small graph.
#[derive(Clone, Debug)]
pub struct ExactTable {
    p: f64,
    q: f64,
    m: usize,
    bc: BoundaryCondition,
    log_z: f64,
    log_w: Vec<f64>,
    prob: Vec<f64>,
    components: Vec<u32>,
}

pub fn enumerate(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition) -> Result<ExactTable> {
    enumerate_with_cap(g, p, q, bc, TABLE_EDGE_CAP)
}

pub fn enumerate_with_cap(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition, cap: usize) -> Result<ExactTable> {
    check_p(p)?;
    check_q(q)?;
    let m = g.num_edges();
    if m > cap {
        return Err(Error::Size { what: "edges", size: m, cap });
    }
    if let Some(v) = bc.max_vertex().filter(|&v| v >= g.n()) {
        return Err(Error::Usage(format!("wired vertex {v} out of range")));
    }
    let components = all_component_counts(g, bc);
    let (lp, lq, lr) = (p.ln(), q.ln(), (1.0 - p).ln());
    let log_w: Vec<f64> = components
        .iter()
        .enumerate()
        .map(|(mask, &c)| {
            let k = mask.count_ones() as f64;
            k * lp + (m as f64 - k) * lr + c as f64 * lq
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = scaled.iter().sum();
    let prob = scaled.iter().map(|w| w / sum).collect();
    Ok(ExactTable { p, q, m, bc: bc.clone(), log_z: max + sum.ln(), log_w, prob, components })
}

impl ExactTable {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn num_edges(&self) -> usize {
        self.m
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Probabilities indexed by bitmask.
    pub fn probs(&self) -> &[f64] {
        &self.prob
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.prob[mask]
    }

    pub fn log_weight(&self, mask: usize) -> f64 {
        self.log_w[mask]
    }

    /// `c(ω; ξ)` for the configuration `mask`.
    pub fn components(&self, mask: usize) -> usize {
        self.components[mask] as usize
    }

    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.prob.iter().enumerate().map(|(mask, &pr)| pr * f(mask)).sum()
    }

    pub fn edge_marginal(&self, e: usize) -> f64 {
        self.expectation(|mask| (mask >> e & 1) as f64)
    }

    /// Law of `ω` restricted to `edges`: entry `k` is the probability that
    /// edge `edges[j]` is open exactly when bit `j` of `k` is set.
    pub fn marginal(&self, edges: &[usize]) -> Result<Vec<f64>> {
        if let Some(&e) = edges.iter().find(|&&e| e >= self.m) {
            return Err(Error::Usage(format!("edge {e} not in the table")));
        }
        let mut out = vec![0.0; 1 << edges.len()];
        for (mask, &pr) in self.prob.iter().enumerate() {
            let k: usize = edges.iter().enumerate().map(|(j, &e)| (mask >> e & 1) << j).sum();
            out[k] += pr;
        }
        Ok(out)
    }

    /// Probability that `u` and `v` are joined by open edges (boundary
    /// wirings included).
    pub fn connection_probability(&self, g: &MultiGraph, u: usize, v: usize) -> f64 {
        let ends = g.endpoint_list();
        let ghosts = self.bc.ghost_edges();
        self.expectation(|mask| {
            let mut uf = UnionFind::new(g.n());
            for &(a, b) in &ghosts {
                uf.union(a, b);
            }
            for (e, &(a, b)) in ends.iter().enumerate() {
                if mask >> e & 1 == 1 {
                    uf.union(a, b);
                }
            }
            uf.same(u, v) as u8 as f64
        })
    }

    /// Rows `bitmask,probability`, sorted by bitmask.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitmask,probability\n");
        for (mask, pr) in self.prob.iter().enumerate() {
            out.push_str(&format!("{mask},{pr:.17e}\n"));
        }
        out
    }
}

/// Total variation distance between the projections of two tables onto
/// `edges`.
pub fn tv_distance(a: &ExactTable, b: &ExactTable, edges: &[usize]) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::Usage("tables are over different edge sets".into()));
    }
    let (ma, mb) = (a.marginal(edges)?, b.marginal(edges)?);
    Ok(0.5 * ma.iter().zip(&mb).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// `D(φ, φ') = c(φ) + c(φ') - 2 c(φ ∨ φ')` over a vertex set of size `n`.
/// For comparable partitions this is the difference of class counts.
pub fn bc_distance(phi: &BoundaryCondition, phi_prime: &BoundaryCondition, n: usize) -> usize {
    let join = phi.join(phi_prime).class_count(n);
    phi.class_count(n) + phi_prime.class_count(n) - 2 * join
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioCheck {
    pub holds: bool,
    /// Largest `π^φ(ω) / π^φ'(ω)` or its inverse over all `ω`.
    pub max_ratio: f64,
    /// `q^{2D}`.
    pub bound: f64,
}

/// Checks `q^{-2D} π^φ'(ω) ≤ π^φ(ω) ≤ q^{2D} π^φ'(ω)` for every `ω`.
pub fn ratio_bound_check(
    g: &MultiGraph,
    p: f64,
    q: f64,
    phi: &BoundaryCondition,
    phi_prime: &BoundaryCondition,
) -> Result<RatioCheck> {
    let a = enumerate(g, p, q, phi)?;
    let b = enumerate(g, p, q, phi_prime)?;
    let d = bc_distance(phi, phi_prime, g.n()) as f64;
    let log_bound = 2.0 * d * q.ln().abs();
    let mut max_log = 0.0f64;
    for mask in 0..a.prob.len() {
        let lr = (a.log_w[mask] - a.log_z) - (b.log_w[mask] - b.log_z);
        max_log = max_log.max(lr.abs());
    }
    Ok(RatioCheck {
        holds: max_log <= log_bound + 1e-9,
        max_ratio: max_log.exp(),
        bound: log_bound.exp(),
    })
}

/// One-step transition matrix of the FK-dynamics: pick an edge uniformly,
/// then resample it from its conditional law given the rest.
pub fn transition_matrix(g: &MultiGraph, p: f64, q: f64, bc: &BoundaryCondition) -> Result<DMatrix<f64>> {
    let table = enumerate_with_cap(g, p, q, bc, MATRIX_EDGE_CAP)?;
    Ok(transition_matrix_from_table(&table))
}

pub fn transition_matrix_from_table(table: &ExactTable) -> DMatrix<f64> {
    let m = table.m;
    let size = 1usize << m;
    let mut mat = DMatrix::zeros(size, size);
    if m == 0 {
        mat[(0, 0)] = 1.0;
        return mat;
    }
    for x in 0..size {
        for e in 0..m {
            let on = x | 1 << e;
            let off = x & !(1 << e);
            let open = 1.0 / (1.0 + (table.log_w[off] - table.log_w[on]).exp());
            mat[(x, on)] += open / m as f64;
            mat[(x, off)] += (1.0 - open) / m as f64;
        }
    }
    mat
}

/// Largest `|π_x P_xy - π_y P_yx|`.
pub fn detailed_balance_error(mat: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            worst = worst.max((pi[x] * mat[(x, y)] - pi[y] * mat[(y, x)]).abs());
        }
    }
    worst
}

/// Solves `πP = π`, `Σπ = 1` by LU decomposition.
pub fn stationary_distribution(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = mat.nrows();
    let mut a = mat.transpose() - DMatrix::identity(n, n);
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    a.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Undefined("stationary distribution is not unique".into()))
}

/// Eigenvalues of a reversible chain, via the symmetrization
/// `D^{1/2} P D^{-1/2}` with `D = diag(π)`, sorted by decreasing magnitude.
pub fn reversible_eigenvalues(mat: &DMatrix<f64>, pi: &[f64]) -> Vec<f64> {
    let n = mat.nrows();
    let s = DMatrix::from_fn(n, n, |x, y| mat[(x, y)] * (pi[x] / pi[y]).sqrt());
    let sym = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    ev
}

/// `1 - |λ_2|` with `λ_2` the second largest eigenvalue in magnitude.
pub fn spectral_gap(mat: &DMatrix<f64>) -> Result<f64> {
    if mat.nrows() < 2 {
        return Err(Error::Undefined("a one-state chain has no spectral gap".into()));
    }
    let pi = stationary_distribution(mat)?;
    let ev = reversible_eigenvalues(mat, &pi);
    Ok(1.0 - ev[1].abs())
}

/// Dirichlet form `E(f, f) = ½ Σ π_x P_xy (f_x - f_y)²`.
pub fn dirichlet_form(mat: &DMatrix<f64>, pi: &[f64], f: &[f64]) -> f64 {
    let n = pi.len();
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            let d = f[x] - f[y];
            s += pi[x] * mat[(x, y)] * d * d;
        }
    }
    0.5 * s
}

/// `Ent_π[f²] = Σ π f² log(f² / E_π[f²])`.
pub fn entropy_sq(pi: &[f64], f: &[f64]) -> f64 {
    let m: f64 = pi.iter().zip(f).map(|(p, x)| p * x * x).sum();
    pi.iter()
        .zip(f)
        .map(|(p, x)| {
            let s = x * x;
            if s > 0.0 {
                p * s * (s / m).ln()
            } else {
                0.0
            }
        })
        .sum()
}

fn ls_ratio_and_grad(mat: &DMatrix<f64>, pi: &[f64], g: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = pi.len();
    let f: Vec<f64> = g.iter().map(|x| x.exp()).collect();
    let e = dirichlet_form(mat, pi, &f);
    let ent = entropy_sq(pi, &f);
    if !(ent > 1e-300) {
        return None;
    }
    let m: f64 = pi.iter().zip(&f).map(|(p, x)| p * x * x).sum();
    let mut grad = vec![0.0; n];
    for x in 0..n {
        let mut de = 0.0;
        for y in 0..n {
            de += pi[x] * mat[(x, y)] * (f[x] - f[y]);
        }
        de *= 2.0;
        let dent = 2.0 * pi[x] * f[x] * (f[x] * f[x] / m).ln();
        grad[x] = f[x] * (de * ent - e * dent) / (ent * ent);
    }
    Some((e / ent, grad))
}

/// Upper estimate of the log-Sobolev constant
/// `α = inf_f E(f, f) / Ent_π[f²]` by gradient descent on `f = e^g` from
/// `trials` random starts.
pub fn log_sobolev_estimate(mat: &DMatrix<f64>, pi: &[f64], trials: usize, seed: u64) -> Result<f64> {
    let n = pi.len();
    if n < 2 {
        return Err(Error::Undefined("log-Sobolev constant of a one-state chain".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut best = f64::INFINITY;
    for _ in 0..trials.max(1) {
        let mut g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let Some((mut val, mut grad)) = ls_ratio_and_grad(mat, pi, &g) else { continue };
        let mut step = 1.0;
        for _ in 0..5000 {
            let norm: f64 = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                break;
            }
            let mut improved = false;
            while step > 1e-14 {
                let cand: Vec<f64> = g.iter().zip(&grad).map(|(x, d)| x - step * d / norm).collect();
                if let Some((v, gr)) = ls_ratio_and_grad(mat, pi, &cand) {
                    if v < val {
                        g = cand;
                        val = v;
                        grad = gr;
                        step *= 1.5;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.min(val);
    }
    Ok(best)
}

//! Connectivity of `(V, open edges)` under single-edge toggles.
//!
//! Boundary wirings are added as permanent ghost edges chaining each class.
//! Two backends share the [`Connectivity`] interface: a recompute-on-demand
//! union-find oracle and a level-based dynamic structure for long runs.

mod bitset;
pub mod ett;
mod hdt;

pub use bitset::{BitsetConnectivity, BITSET_MAX_VERTICES};
pub use hdt::HdtConnectivity;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

pub trait Connectivity: Sized {
    /// State for the graph with the given edge endpoints, open set `omega`
    /// and boundary wirings.
    fn build(n: usize, ends: &[(usize, usize)], wirings: &BoundaryCondition, omega: &[bool]) -> Result<Self>;

    fn n(&self) -> usize;

    fn num_edges(&self) -> usize;

    fn endpoints(&self, e: usize) -> (usize, usize);

    fn is_open(&self, e: usize) -> bool;

    fn toggle(&mut self, e: usize, value: bool);

    fn connected(&mut self, u: usize, v: usize) -> bool;

    /// Components of `(V, open ∪ ghost edges)`.
    fn component_count(&self) -> usize;

    /// Whether the endpoints of `e` are disconnected once `e` is removed.
    /// Does not depend on the current state of `e`.
    fn is_cut_edge(&mut self, e: usize) -> bool;

    fn omega(&self) -> Vec<bool> {
        (0..self.num_edges()).map(|e| self.is_open(e)).collect()
    }
}

pub(crate) fn check_inputs(
    n: usize,
    ends: &[(usize, usize)],
    wirings: &BoundaryCondition,
    omega: &[bool],
) -> Result<()> {
    if omega.len() != ends.len() {
        return Err(Error::Usage(format!(
            "configuration has {} entries for {} edges",
            omega.len(),
            ends.len()
        )));
    }
    if let Some(&(a, b)) = ends.iter().find(|&&(a, b)| a >= n || b >= n) {
        return Err(Error::Usage(format!("edge ({a}, {b}) out of range for n = {n}")));
    }
    if let Some(v) = wirings.max_vertex().filter(|&v| v >= n) {
        return Err(Error::Usage(format!("wired vertex {v} out of range for n = {n}")));
    }
    Ok(())
}

/// Union-find rebuilt from scratch whenever the configuration changed.
#[derive(Clone, Debug)]
pub struct NaiveConnectivity {
    n: usize,
    ends: Vec<(usize, usize)>,
    ghosts: Vec<(usize, usize)>,
    open: Vec<bool>,
    cache: Option<UnionFind>,
}

impl NaiveConnectivity {
    fn rebuild(&self, skip: Option<usize>) -> UnionFind {
        let mut uf = UnionFind::new(self.n);
        for &(a, b) in &self.ghosts {
            uf.union(a, b);
        }
        for (e, &(a, b)) in self.ends.iter().enumerate() {
            if self.open[e] && Some(e) != skip {
                uf.union(a, b);
            }
        }
        uf
    }

    fn uf(&mut self) -> &mut UnionFind {
        if self.cache.is_none() {
            self.cache = Some(self.rebuild(None));
        }
        self.cache.as_mut().expect("just built")
    }

    /// Component label of every vertex (smallest vertex of its component).
    pub fn labels(&mut self) -> Vec<usize> {
        let n = self.n;
        let uf = self.uf();
        let mut min = vec![usize::MAX; n];
        let roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
        for v in 0..n {
            min[roots[v]] = min[roots[v]].min(v);
        }
        roots.iter().map(|&r| min[r]).collect()
    }
}

impl Connectivity for NaiveConnectivity {
    fn build(n: usize, ends: &[(usize, usize)], wirings: &BoundaryCondition, omega: &[bool]) -> Result<Self> {
        check_inputs(n, ends, wirings, omega)?;
        Ok(NaiveConnectivity {
            n,
            ends: ends.to_vec(),
            ghosts: wirings.ghost_edges(),
            open: omega.to_vec(),
            cache: None,
        })
    }

    fn n(&self) -> usize {
        self.n
    }

    fn num_edges(&self) -> usize {
        self.ends.len()
    }

    fn endpoints(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    fn is_open(&self, e: usize) -> bool {
        self.open[e]
    }

    fn toggle(&mut self, e: usize, value: bool) {
        if self.open[e] != value {
            self.open[e] = value;
            self.cache = None;
        }
    }

    fn connected(&mut self, u: usize, v: usize) -> bool {
        self.uf().same(u, v)
    }

    fn component_count(&self) -> usize {
        match &self.cache {
            Some(uf) => uf.count(),
            None => self.rebuild(None).count(),
        }
    }

    fn is_cut_edge(&mut self, e: usize) -> bool {
        let (a, b) = self.ends[e];
        a != b && !self.rebuild(Some(e)).same(a, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Naive,
    Bitset,
    Hdt,
}

impl BackendKind {
    /// Bitsets up to 128 vertices, the level structure beyond.
    pub fn auto(n: usize) -> Self {
        if n <= BITSET_MAX_VERTICES {
            BackendKind::Bitset
        } else {
            BackendKind::Hdt
        }
    }
}

/// Any of the backends behind one type.
#[derive(Clone, Debug)]
pub enum Backend {
    Naive(NaiveConnectivity),
    Bitset(BitsetConnectivity),
    Hdt(HdtConnectivity),
}

macro_rules! dispatch {
    ($self:expr, $c:ident => $body:expr) => {
        match $self {
            Backend::Naive($c) => $body,
            Backend::Bitset($c) => $body,
            Backend::Hdt($c) => $body,
        }
    };
}

impl Backend {
    pub fn build_kind(
        kind: BackendKind,
        n: usize,
        ends: &[(usize, usize)],
        wirings: &BoundaryCondition,
        omega: &[bool],
    ) -> Result<Self> {
        Ok(match kind {
            BackendKind::Naive => Backend::Naive(NaiveConnectivity::build(n, ends, wirings, omega)?),
            BackendKind::Bitset => Backend::Bitset(BitsetConnectivity::build(n, ends, wirings, omega)?),
            BackendKind::Hdt => Backend::Hdt(HdtConnectivity::build(n, ends, wirings, omega)?),
        })
    }
}

impl Connectivity for Backend {
    fn build(n: usize, ends: &[(usize, usize)], wirings: &BoundaryCondition, omega: &[bool]) -> Result<Self> {
        Self::build_kind(BackendKind::auto(n), n, ends, wirings, omega)
    }

    fn n(&self) -> usize {
        dispatch!(self, c => c.n())
    }

    fn num_edges(&self) -> usize {
        dispatch!(self, c => c.num_edges())
    }

    fn endpoints(&self, e: usize) -> (usize, usize) {
        dispatch!(self, c => c.endpoints(e))
    }

    fn is_open(&self, e: usize) -> bool {
        dispatch!(self, c => c.is_open(e))
    }

    fn toggle(&mut self, e: usize, value: bool) {
        dispatch!(self, c => c.toggle(e, value))
    }

    fn connected(&mut self, u: usize, v: usize) -> bool {
        dispatch!(self, c => c.connected(u, v))
    }

    fn component_count(&self) -> usize {
        dispatch!(self, c => c.component_count())
    }

    fn is_cut_edge(&mut self, e: usize) -> bool {
        dispatch!(self, c => c.is_cut_edge(e))
    }
}

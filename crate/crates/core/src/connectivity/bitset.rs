use super::{check_inputs, Connectivity};
use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};

/// Adjacency bitsets for graphs with at most 128 vertices. Queries are
/// breadth-first searches over words, which beats the level structure on
/// balls and small trees.
#[derive(Clone, Debug)]
pub struct BitsetConnectivity {
    n: usize,
    ends: Vec<(usize, usize)>,
    open: Vec<bool>,
    count: Vec<u16>,
    adj: Vec<u128>,
}

pub const BITSET_MAX_VERTICES: usize = 128;

impl BitsetConnectivity {
    fn add(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.count[a * self.n + b] += 1;
        self.count[b * self.n + a] += 1;
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    fn remove(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.count[a * self.n + b] -= 1;
        self.count[b * self.n + a] -= 1;
        if self.count[a * self.n + b] == 0 {
            self.adj[a] &= !(1 << b);
            self.adj[b] &= !(1 << a);
        }
    }

    /// Vertices reachable from `a`, stopping early once `stop` is reached.
    fn reach(&self, a: usize, stop: usize) -> u128 {
        let mut seen: u128 = 1 << a;
        let mut frontier = seen;
        while frontier != 0 && (stop >= BITSET_MAX_VERTICES || seen >> stop & 1 == 0) {
            let mut next = 0u128;
            let mut f = frontier;
            while f != 0 {
                let x = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.adj[x];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen
    }

    /// The open cluster of `v` as a bitset (boundary wirings included).
    pub fn cluster(&self, v: usize) -> u128 {
        self.reach(v, BITSET_MAX_VERTICES)
    }
}

impl Connectivity for BitsetConnectivity {
    fn build(n: usize, ends: &[(usize, usize)], wirings: &BoundaryCondition, omega: &[bool]) -> Result<Self> {
        check_inputs(n, ends, wirings, omega)?;
        if n > BITSET_MAX_VERTICES {
            return Err(Error::Size { what: "vertices", size: n, cap: BITSET_MAX_VERTICES });
        }
        let mut s = BitsetConnectivity {
            n,
            ends: ends.to_vec(),
            open: omega.to_vec(),
            count: vec![0; n * n],
            adj: vec![0; n],
        };
        for (a, b) in wirings.ghost_edges() {
            s.add(a, b);
        }
        for (e, &(a, b)) in ends.iter().enumerate() {
            if omega[e] {
                s.add(a, b);
            }
        }
        Ok(s)
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
        if self.open[e] == value {
            return;
        }
        self.open[e] = value;
        let (a, b) = self.ends[e];
        if value {
            self.add(a, b);
        } else {
            self.remove(a, b);
        }
    }

    fn connected(&mut self, u: usize, v: usize) -> bool {
        self.reach(u, v) >> v & 1 == 1
    }

    fn component_count(&self) -> usize {
        let all: u128 = if self.n == 128 { u128::MAX } else { (1u128 << self.n) - 1 };
        let mut seen = 0u128;
        let mut count = 0;
        while seen != all {
            let v = (!seen & all).trailing_zeros() as usize;
            seen |= self.cluster(v);
            count += 1;
        }
        count
    }

    fn is_cut_edge(&mut self, e: usize) -> bool {
        let (a, b) = self.ends[e];
        if a == b {
            return false;
        }
        let was_open = self.open[e];
        if was_open {
            self.remove(a, b);
        }
        let cut = self.reach(a, b) >> b & 1 == 0;
        if was_open {
            self.add(a, b);
        }
        cut
    }
}

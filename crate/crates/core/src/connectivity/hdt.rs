//! Fully dynamic connectivity with edge levels over Euler-tour forests.
//!
//! Tree edges of level `i` belong to the forests `F_0..=F_i`; `F_0` spans
//! the open graph. Deleting a tree edge searches for a replacement from the
//! highest level down, pushing the smaller side's edges one level up as it
//! goes. The component count is `n` minus the number of tree edges.

use super::ett::{Arcs, EulerTourForest};
use super::{check_inputs, Connectivity};
use crate::boundary::BoundaryCondition;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Absent,
    Loop,
    Tree { level: usize },
    NonTree { level: usize, pos: [usize; 2] },
}

#[derive(Clone, Debug)]
pub struct HdtConnectivity {
    n: usize,
    num_real: usize,
    ends: Vec<(usize, usize)>,
    open: Vec<bool>,
    kind: Vec<Kind>,
    arcs: Vec<Vec<Arcs>>,
    forests: Vec<EulerTourForest>,
    nontree: Vec<Vec<Vec<usize>>>,
    tree_edges: usize,
}

impl HdtConnectivity {
    fn level_count(n: usize) -> usize {
        (usize::BITS - n.max(1).leading_zeros()) as usize + 1
    }

    fn new_empty(n: usize, ends: Vec<(usize, usize)>, num_real: usize) -> Self {
        let levels = Self::level_count(n);
        let m = ends.len();
        HdtConnectivity {
            n,
            num_real,
            ends,
            open: vec![false; m],
            kind: vec![Kind::Absent; m],
            arcs: vec![Vec::new(); m],
            forests: (0..levels).map(|i| EulerTourForest::new(n, 0x5eed + i as u64)).collect(),
            nontree: vec![vec![Vec::new(); n]; levels],
            tree_edges: 0,
        }
    }

    fn add_nontree(&mut self, e: usize, level: usize) {
        let (a, b) = self.ends[e];
        let pa = self.nontree[level][a].len();
        self.nontree[level][a].push(e);
        let pb = self.nontree[level][b].len();
        self.nontree[level][b].push(e);
        self.kind[e] = Kind::NonTree { level, pos: [pa, pb] };
        for x in [a, b] {
            if self.nontree[level][x].len() == 1 {
                self.forests[level].set_vertex_flag(x, true);
            }
        }
    }

    fn remove_nontree(&mut self, e: usize) {
        let Kind::NonTree { level, pos } = self.kind[e] else {
            unreachable!("edge is not a non-tree edge")
        };
        let (a, b) = self.ends[e];
        for (side, x) in [a, b].into_iter().enumerate() {
            let list = &mut self.nontree[level][x];
            let p = pos[side];
            list.swap_remove(p);
            if let Some(&moved) = list.get(p) {
                if let Kind::NonTree { pos: ref mut mp, .. } = self.kind[moved] {
                    let side_of_x = if self.ends[moved].0 == x { 0 } else { 1 };
                    mp[side_of_x] = p;
                }
            }
            if list.is_empty() {
                self.forests[level].set_vertex_flag(x, false);
            }
        }
        self.kind[e] = Kind::Absent;
    }

    fn link_tree(&mut self, e: usize, level: usize) {
        let (a, b) = self.ends[e];
        let mut arcs = Vec::with_capacity(level + 1);
        for i in 0..=level {
            arcs.push(self.forests[i].link(a, b, e));
        }
        self.forests[level].set_arc_flag(arcs[level], true);
        self.arcs[e] = arcs;
        self.kind[e] = Kind::Tree { level };
        self.tree_edges += 1;
    }

    fn insert(&mut self, e: usize) {
        let (a, b) = self.ends[e];
        if a == b {
            self.kind[e] = Kind::Loop;
        } else if self.forests[0].connected(a, b) {
            self.add_nontree(e, 0);
        } else {
            self.link_tree(e, 0);
        }
    }

    fn delete(&mut self, e: usize) {
        match self.kind[e] {
            Kind::Absent => {}
            Kind::Loop => self.kind[e] = Kind::Absent,
            Kind::NonTree { .. } => self.remove_nontree(e),
            Kind::Tree { level } => {
                let arcs = std::mem::take(&mut self.arcs[e]);
                for (i, a) in arcs.into_iter().enumerate() {
                    self.forests[i].cut(a);
                }
                self.kind[e] = Kind::Absent;
                self.tree_edges -= 1;
                let (a, b) = self.ends[e];
                for i in (0..=level).rev() {
                    if self.replace(a, b, i) {
                        break;
                    }
                }
            }
        }
    }

    /// Looks for a level-`i` replacement edge reconnecting the trees of `a`
    /// and `b` in `F_i`. Returns true when one was found and linked.
    fn replace(&mut self, a: usize, b: usize, i: usize) -> bool {
        let small = if self.forests[i].tour_len(a) <= self.forests[i].tour_len(b) { a } else { b };
        while let Some(f) = self.forests[i].find_flagged_arc(small) {
            let arcs_i = self.arcs[f][i];
            self.forests[i].set_arc_flag(arcs_i, false);
            let (x, y) = self.ends[f];
            let up = self.forests[i + 1].link(x, y, f);
            self.forests[i + 1].set_arc_flag(up, true);
            self.arcs[f].push(up);
            self.kind[f] = Kind::Tree { level: i + 1 };
        }
        while let Some(x) = self.forests[i].find_flagged_vertex(small) {
            while let Some(&f) = self.nontree[i][x].last() {
                let (u, v) = self.ends[f];
                let other = if u == x { v } else { u };
                self.remove_nontree(f);
                if self.forests[i].connected(other, small) {
                    self.add_nontree(f, i + 1);
                } else {
                    self.link_tree(f, i);
                    return true;
                }
            }
        }
        false
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        for (e, k) in self.kind.iter().enumerate() {
            match *k {
                Kind::Tree { level } => {
                    assert!(self.open[e]);
                    assert_eq!(self.arcs[e].len(), level + 1);
                }
                Kind::NonTree { level, .. } => {
                    let (a, b) = self.ends[e];
                    assert!(self.forests[level].connected(a, b));
                }
                Kind::Absent => assert!(!self.open[e]),
                Kind::Loop => assert!(self.open[e]),
            }
        }
        for (i, f) in self.forests.iter().enumerate() {
            for v in 0..self.n {
                let size = (f.tour_len(v) + 2) / 3;
                assert!(size <= (self.n >> i).max(1), "level {i} tree too large");
            }
        }
    }
}

impl Connectivity for HdtConnectivity {
    fn build(n: usize, ends: &[(usize, usize)], wirings: &BoundaryCondition, omega: &[bool]) -> Result<Self> {
        check_inputs(n, ends, wirings, omega)?;
        let mut all = ends.to_vec();
        all.extend(wirings.ghost_edges());
        let mut s = Self::new_empty(n, all, ends.len());
        for e in 0..s.ends.len() {
            if e >= s.num_real || omega[e] {
                s.open[e] = true;
                s.insert(e);
            }
        }
        Ok(s)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn num_edges(&self) -> usize {
        self.num_real
    }

    fn endpoints(&self, e: usize) -> (usize, usize) {
        self.ends[e]
    }

    fn is_open(&self, e: usize) -> bool {
        self.open[e]
    }

    fn toggle(&mut self, e: usize, value: bool) {
        assert!(e < self.num_real, "edge {e} out of range");
        if self.open[e] == value {
            return;
        }
        self.open[e] = value;
        if value {
            self.insert(e);
        } else {
            self.delete(e);
        }
    }

    fn connected(&mut self, u: usize, v: usize) -> bool {
        self.forests[0].connected(u, v)
    }

    fn component_count(&self) -> usize {
        self.n - self.tree_edges
    }

    fn is_cut_edge(&mut self, e: usize) -> bool {
        let (a, b) = self.ends[e];
        if a == b {
            return false;
        }
        match self.kind[e] {
            Kind::NonTree { .. } => false,
            Kind::Tree { .. } => {
                self.toggle(e, false);
                let cut = !self.forests[0].connected(a, b);
                self.toggle(e, true);
                cut
            }
            _ => !self.forests[0].connected(a, b),
        }
    }
}

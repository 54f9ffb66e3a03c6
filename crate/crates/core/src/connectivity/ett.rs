//! Euler-tour forests stored as treaps with parent pointers.
//!
//! Each tree of the forest is kept as the cyclic sequence of its Euler tour:
//! one node per vertex plus one node per directed arc of every tree edge.
//! Nodes carry two flag bits that are aggregated over subtrees so a tree
//! can be searched for a flagged arc or vertex in logarithmic time.

use rand::Rng;

use crate::rng::{rng_from_seed, SimRng};

const NIL: u32 = u32::MAX;

pub const ARC_FLAG: u8 = 1;
pub const VERTEX_FLAG: u8 = 2;

#[derive(Clone, Copy, Debug)]
struct Node {
    left: u32,
    right: u32,
    parent: u32,
    prio: u32,
    size: u32,
    tag: u32,
    own: u8,
    agg: u8,
}

/// A handle to the two arc nodes of a linked tree edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arcs(u32, u32);

impl Arcs {
    /// The arc node that carries the edge's flag.
    pub fn primary(&self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct EulerTourForest {
    n: usize,
    nodes: Vec<Node>,
    free: Vec<u32>,
    rng: SimRng,
}

impl EulerTourForest {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let nodes = (0..n)
            .map(|v| Node {
                left: NIL,
                right: NIL,
                parent: NIL,
                prio: rng.gen(),
                size: 1,
                tag: v as u32,
                own: 0,
                agg: 0,
            })
            .collect();
        EulerTourForest { n, nodes, free: Vec::new(), rng }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn size(&self, x: u32) -> u32 {
        if x == NIL {
            0
        } else {
            self.nodes[x as usize].size
        }
    }

    fn agg(&self, x: u32) -> u8 {
        if x == NIL {
            0
        } else {
            self.nodes[x as usize].agg
        }
    }

    fn pull(&mut self, x: u32) {
        let Node { left, right, own, .. } = self.nodes[x as usize];
        let size = 1 + self.size(left) + self.size(right);
        let agg = own | self.agg(left) | self.agg(right);
        let node = &mut self.nodes[x as usize];
        node.size = size;
        node.agg = agg;
    }

    fn set_parent(&mut self, child: u32, parent: u32) {
        if child != NIL {
            self.nodes[child as usize].parent = parent;
        }
    }

    fn root(&self, mut x: u32) -> u32 {
        while self.nodes[x as usize].parent != NIL {
            x = self.nodes[x as usize].parent;
        }
        x
    }

    fn position(&self, mut x: u32) -> u32 {
        let mut pos = self.size(self.nodes[x as usize].left);
        while self.nodes[x as usize].parent != NIL {
            let p = self.nodes[x as usize].parent;
            if self.nodes[p as usize].right == x {
                pos += self.size(self.nodes[p as usize].left) + 1;
            }
            x = p;
        }
        pos
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let r = self.nodes[a as usize].right;
            let m = self.merge(r, b);
            self.nodes[a as usize].right = m;
            self.set_parent(m, a);
            self.pull(a);
            a
        } else {
            let l = self.nodes[b as usize].left;
            let m = self.merge(a, l);
            self.nodes[b as usize].left = m;
            self.set_parent(m, b);
            self.pull(b);
            b
        }
    }

    /// Splits the tree rooted at `t` into its first `k` nodes and the rest.
    /// Both returned roots have no parent when `t` had none.
    fn split(&mut self, t: u32, k: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let left = self.nodes[t as usize].left;
        let right = self.nodes[t as usize].right;
        let ls = self.size(left);
        if k <= ls {
            let (a, b) = self.split(left, k);
            self.nodes[t as usize].left = b;
            self.set_parent(b, t);
            self.set_parent(a, NIL);
            self.pull(t);
            (a, t)
        } else {
            let (a, b) = self.split(right, k - ls - 1);
            self.nodes[t as usize].right = a;
            self.set_parent(a, t);
            self.set_parent(b, NIL);
            self.pull(t);
            (t, b)
        }
    }

    /// Rotates the tour containing `x` so that `x` comes first.
    fn reroot(&mut self, x: u32) -> u32 {
        let r = self.root(x);
        let k = self.position(x);
        let (a, b) = self.split(r, k);
        self.merge(b, a)
    }

    fn alloc(&mut self, tag: u32) -> u32 {
        let node = Node {
            left: NIL,
            right: NIL,
            parent: NIL,
            prio: self.rng.gen(),
            size: 1,
            tag,
            own: 0,
            agg: 0,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    pub fn connected(&self, u: usize, v: usize) -> bool {
        u == v || self.root(u as u32) == self.root(v as u32)
    }

    /// Number of tour nodes in the tree of `v` (`3k - 2` for `k` vertices).
    pub fn tour_len(&self, v: usize) -> usize {
        self.size(self.root(v as u32)) as usize
    }

    /// Joins the trees of `u` and `v` with an edge tagged `edge`.
    pub fn link(&mut self, u: usize, v: usize, edge: usize) -> Arcs {
        debug_assert!(!self.connected(u, v));
        let ru = self.reroot(u as u32);
        let rv = self.reroot(v as u32);
        let uv = self.alloc(edge as u32);
        let vu = self.alloc(edge as u32);
        let t = self.merge(ru, uv);
        let t = self.merge(t, rv);
        self.merge(t, vu);
        Arcs(uv, vu)
    }

    /// Removes a tree edge previously returned by [`EulerTourForest::link`].
    pub fn cut(&mut self, arcs: Arcs) {
        let (mut a, mut b) = (arcs.0, arcs.1);
        let r = self.root(a);
        let (mut pa, mut pb) = (self.position(a), self.position(b));
        if pa > pb {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut pa, &mut pb);
        }
        let (left, rest) = self.split(r, pa);
        let (_, rest) = self.split(rest, 1);
        let (_middle, rest) = self.split(rest, pb - pa - 1);
        let (_, right) = self.split(rest, 1);
        self.merge(left, right);
        for x in [a, b] {
            self.nodes[x as usize].own = 0;
            self.nodes[x as usize].agg = 0;
            self.nodes[x as usize].parent = NIL;
            self.free.push(x);
        }
    }

    fn set_flag(&mut self, x: u32, bit: u8, on: bool) {
        let node = &mut self.nodes[x as usize];
        let before = node.own;
        if on {
            node.own |= bit;
        } else {
            node.own &= !bit;
        }
        if node.own == before {
            return;
        }
        let mut y = x;
        while y != NIL {
            self.pull(y);
            y = self.nodes[y as usize].parent;
        }
    }

    pub fn set_arc_flag(&mut self, arcs: Arcs, on: bool) {
        self.set_flag(arcs.0, ARC_FLAG, on);
    }

    pub fn set_vertex_flag(&mut self, v: usize, on: bool) {
        self.set_flag(v as u32, VERTEX_FLAG, on);
    }

    fn find(&self, v: usize, bit: u8) -> Option<u32> {
        let mut x = self.root(v as u32);
        if self.agg(x) & bit == 0 {
            return None;
        }
        loop {
            let node = &self.nodes[x as usize];
            if node.own & bit != 0 {
                return Some(x);
            }
            x = if self.agg(node.left) & bit != 0 { node.left } else { node.right };
        }
    }

    /// Tag of some flagged arc in the tree of `v`.
    pub fn find_flagged_arc(&self, v: usize) -> Option<usize> {
        self.find(v, ARC_FLAG).map(|x| self.nodes[x as usize].tag as usize)
    }

    /// Some flagged vertex in the tree of `v`.
    pub fn find_flagged_vertex(&self, v: usize) -> Option<usize> {
        self.find(v, VERTEX_FLAG).map(|x| self.nodes[x as usize].tag as usize)
    }

    /// Vertices in the tree of `v`, in tour order.
    pub fn tree_vertices(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        let mut x = self.root(v as u32);
        while x != NIL || !stack.is_empty() {
            while x != NIL {
                stack.push(x);
                x = self.nodes[x as usize].left;
            }
            let y = stack.pop().expect("nonempty");
            if (y as usize) < self.n {
                out.push(y as usize);
            }
            x = self.nodes[y as usize].right;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_cut_path() {
        let mut f = EulerTourForest::new(5, 1);
        let a = f.link(0, 1, 0);
        let b = f.link(1, 2, 1);
        let c = f.link(3, 4, 2);
        assert!(f.connected(0, 2));
        assert!(!f.connected(0, 3));
        assert_eq!(f.tour_len(0), 7);
        f.cut(b);
        assert!(!f.connected(0, 2));
        assert!(f.connected(0, 1));
        let _ = f.link(2, 3, 3);
        assert!(f.connected(2, 4));
        f.cut(a);
        f.cut(c);
        assert!(f.connected(2, 3));
        assert!(!f.connected(3, 4));
        let mut vs = f.tree_vertices(3);
        vs.sort_unstable();
        assert_eq!(vs, vec![2, 3]);
    }

    #[test]
    fn flags_are_found() {
        let mut f = EulerTourForest::new(4, 2);
        let a = f.link(0, 1, 10);
        f.link(1, 2, 11);
        assert_eq!(f.find_flagged_arc(2), None);
        f.set_arc_flag(a, true);
        assert_eq!(f.find_flagged_arc(2), Some(10));
        assert_eq!(f.find_flagged_arc(3), None);
        f.set_vertex_flag(2, true);
        assert_eq!(f.find_flagged_vertex(0), Some(2));
        f.set_vertex_flag(2, false);
        assert_eq!(f.find_flagged_vertex(0), None);
        f.cut(a);
        assert_eq!(f.find_flagged_arc(1), None);
    }
}

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// A partition of a subset of the vertices into wired classes.
///
/// Vertices not listed in any class are singletons. Classes are stored
/// sorted, with singleton classes dropped, so equal partitions compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    classes: Vec<Vec<usize>>,
}

impl BoundaryCondition {
    pub fn new(classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for mut class in classes {
            class.sort_unstable();
            class.dedup();
            for &v in &class {
                if seen.insert(v, ()).is_some() {
                    return Err(Error::Usage(format!("vertex {v} appears in two classes")));
                }
            }
            if class.len() >= 2 {
                out.push(class);
            }
        }
        out.sort_unstable();
        Ok(BoundaryCondition { classes: out })
    }

    /// Every vertex is its own class.
    pub fn free() -> Self {
        BoundaryCondition::default()
    }

    /// A single class containing all of `vertices`.
    pub fn wired(vertices: &[usize]) -> Self {
        BoundaryCondition::new(vec![vertices.to_vec()]).expect("one class is disjoint")
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn is_free(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn max_vertex(&self) -> Option<usize> {
        self.classes.iter().flatten().copied().max()
    }

    /// Number of classes on a vertex set of size `n`, singletons included.
    pub fn class_count(&self, n: usize) -> usize {
        n - self.classes.iter().map(|c| c.len() - 1).sum::<usize>()
    }

    /// Pairs of consecutive vertices in each class; their union wires the
    /// class together.
    pub fn ghost_edges(&self) -> Vec<(usize, usize)> {
        self.classes
            .iter()
            .flat_map(|c| c.windows(2).map(|w| (w[0], w[1])))
            .collect()
    }

    /// `self ≤ other`: every class of `self` lies inside a class of `other`.
    pub fn refines(&self, other: &BoundaryCondition) -> bool {
        let owner: HashMap<usize, usize> = other
            .classes
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&v| (v, i)))
            .collect();
        self.classes.iter().all(|c| {
            let first = owner.get(&c[0]);
            first.is_some() && c.iter().all(|v| owner.get(v) == first)
        })
    }

    /// Finest partition coarser than both.
    pub fn join(&self, other: &BoundaryCondition) -> BoundaryCondition {
        let mut verts: Vec<usize> = self.classes.iter().chain(&other.classes).flatten().copied().collect();
        verts.sort_unstable();
        verts.dedup();
        let index: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut uf = UnionFind::new(verts.len());
        for (a, b) in self.ghost_edges().into_iter().chain(other.ghost_edges()) {
            uf.union(index[&a], index[&b]);
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &v) in verts.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(v);
        }
        BoundaryCondition::new(groups.into_values().collect()).expect("union-find classes are disjoint")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        let a = BoundaryCondition::new(vec![vec![3, 1], vec![7], vec![2, 0]]).unwrap();
        let b = BoundaryCondition::new(vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(a, b);
        assert!(BoundaryCondition::new(vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn order_and_join() {
        let free = BoundaryCondition::free();
        let ab = BoundaryCondition::wired(&[0, 1]);
        let cd = BoundaryCondition::wired(&[2, 3]);
        assert!(free.refines(&ab));
        assert!(!ab.refines(&free));
        assert!(!ab.refines(&cd) && !cd.refines(&ab));
        let j = ab.join(&cd);
        assert_eq!(j.class_count(4), 2);
        assert!(ab.refines(&j) && cd.refines(&j));
        let chain = BoundaryCondition::wired(&[1, 2]).join(&ab);
        assert_eq!(chain, BoundaryCondition::wired(&[0, 1, 2]));
    }
}

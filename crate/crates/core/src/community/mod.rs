//! Community structure and network metrics on similarity graphs.

mod betweenness;
mod dendrogram;
mod girvan_newman;
mod metrics;

use std::io::Write;

pub use betweenness::edge_betweenness;
pub use dendrogram::{cut_dendrogram, hierarchical_dendrogram, Dendrogram, Merge};
pub use girvan_newman::{girvan_newman, girvan_newman_with, GirvanNewman, GnOptions, SplitRecord};
pub use metrics::{
    avg_path_length, avg_path_length_from, clustering_coefficient, modularity, random_baseline,
    LowDegree, PathMode, PathStats,
};

use crate::error::{Error, Result};

/// Assignment of each vertex to one community; labels are `0..count`,
/// numbered by first appearance in vertex order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Relabel arbitrary labels contiguously by first appearance.
    pub fn from_labels<L: Eq + std::hash::Hash + Clone>(labels: &[L]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(l.clone()).or_insert(next)
            })
            .collect();
        Partition {
            assignment,
            community_count: map.len(),
        }
    }

    pub fn single(n: usize) -> Self {
        Partition::from_labels(&vec![0u8; n])
    }

    pub fn singletons(n: usize) -> Self {
        Partition::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Community sizes indexed by label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Fraction of vertices whose community maps to their planted label
    /// under a greedy one-to-one matching by overlap.
    pub fn agreement(&self, planted: &[usize]) -> Result<f64> {
        if planted.len() != self.len() {
            return Err(Error::arg("planted labels and partition differ in length"));
        }
        if self.is_empty() {
            return Ok(1.0);
        }
        let mut overlap = std::collections::BTreeMap::<(usize, usize), usize>::new();
        for (&c, &p) in self.assignment.iter().zip(planted) {
            *overlap.entry((c, p)).or_default() += 1;
        }
        let mut cells: Vec<((usize, usize), usize)> = overlap.into_iter().collect();
        cells.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut used_c = std::collections::HashSet::new();
        let mut used_p = std::collections::HashSet::new();
        let mut hit = 0;
        for ((c, p), count) in cells {
            if used_c.contains(&c) || used_p.contains(&p) {
                continue;
            }
            used_c.insert(c);
            used_p.insert(p);
            hit += count;
        }
        Ok(hit as f64 / self.len() as f64)
    }

    /// `node_id,community`
    pub fn write_csv<W: Write>(&self, names: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(out, "node_id,community")?;
        for (name, c) in names.iter().zip(&self.assignment) {
            writeln!(out, "{name},{c}")?;
        }
        Ok(())
    }
}

/// Connected components over the edges flagged alive.
pub(crate) fn components(adj: &[Vec<(usize, usize)>], alive: &[bool]) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        stack.push(s);
        while let Some(v) = stack.pop() {
            for &(w, e) in &adj[v] {
                if alive[e] && label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_contiguous_by_first_appearance() {
        let p = Partition::from_labels(&["x", "y", "x", "z"]);
        assert_eq!(p.assignment(), [0, 1, 0, 2]);
        assert_eq!(p.community_count(), 3);
        assert_eq!(p.sizes(), [2, 1, 1]);
    }

    #[test]
    fn agreement_matches_relabelled_partitions() {
        let p = Partition::from_labels(&[5, 5, 7, 7, 7]);
        assert_eq!(p.agreement(&[1, 1, 0, 0, 0]).unwrap(), 1.0);
        assert_eq!(p.agreement(&[1, 0, 0, 0, 0]).unwrap(), 0.8);
        // One community cannot match two planted groups.
        assert_eq!(Partition::single(4).agreement(&[0, 0, 1, 1]).unwrap(), 0.5);
    }
}

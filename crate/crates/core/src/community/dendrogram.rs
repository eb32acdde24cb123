use std::fmt::Write as _;

use super::Partition;
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// One agglomeration step. Leaves are `0..n`; step `t` creates cluster `n + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Binary merge tree over `labels`, heights nondecreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    labels: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaves(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn root_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.height)
    }

    fn height_of(&self, id: usize) -> f64 {
        if id < self.leaves() {
            0.0
        } else {
            self.merges[id - self.leaves()].height
        }
    }

    /// Newick text; branch lengths are height differences.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        if self.merges.is_empty() {
            if let Some(l) = self.labels.first() {
                out.push_str(&newick_label(l));
            }
            out.push(';');
            return out;
        }
        let root = self.leaves() + self.merges.len() - 1;
        self.write_node(root, &mut out);
        out.push(';');
        out
    }

    fn write_node(&self, id: usize, out: &mut String) {
        if id < self.leaves() {
            out.push_str(&newick_label(&self.labels[id]));
            return;
        }
        let m = self.merges[id - self.leaves()];
        out.push('(');
        for (k, child) in [m.left, m.right].into_iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            self.write_node(child, out);
            let _ = write!(out, ":{:.6}", m.height - self.height_of(child));
        }
        out.push(')');
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().any(|c| "()[]':;, \t".contains(c)) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

/// Average-linkage agglomerative clustering on `1 − Sim`.
///
/// Always merges the closest pair; among equal distances the pair of lowest
/// slot indices wins, where a merged cluster occupies the lower slot of its two
/// parts.
pub fn hierarchical_dendrogram(matrix: &SimilarityMatrix) -> Result<Dendrogram> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::arg(format!(
            "clustering needs at least 2 users, got {n}"
        )));
    }
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = 1.0 - matrix.get(i, j);
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let rescan =
        |k: usize, dist: &[f64], active: &[bool], nn: &mut [usize], nn_dist: &mut [f64]| {
            nn[k] = usize::MAX;
            nn_dist[k] = f64::INFINITY;
            for l in k + 1..n {
                if active[l] && dist[k * n + l] < nn_dist[k] {
                    nn[k] = l;
                    nn_dist[k] = dist[k * n + l];
                }
            }
        };
    for k in 0..n {
        rescan(k, &dist, &active, &mut nn, &mut nn_dist);
    }

    let mut merges = Vec::with_capacity(n - 1);
    let mut last_height = 0.0f64;
    for step in 0..n - 1 {
        let mut i = usize::MAX;
        for k in 0..n {
            if active[k] && nn[k] != usize::MAX && (i == usize::MAX || nn_dist[k] < nn_dist[i]) {
                i = k;
            }
        }
        let j = nn[i];
        let height = nn_dist[i].max(last_height);
        last_height = height;
        let (a, b) = (id[i].min(id[j]), id[i].max(id[j]));
        merges.push(Merge {
            left: a,
            right: b,
            height,
            size: size[i] + size[j],
        });

        let (si, sj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if active[k] && k != i && k != j {
                let d = (si * dist[k * n + i] + sj * dist[k * n + j]) / (si + sj);
                dist[k * n + i] = d;
                dist[i * n + k] = d;
            }
        }
        active[j] = false;
        size[i] += size[j];
        id[i] = n + step;

        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            if k < i {
                if nn[k] == i || nn[k] == j {
                    rescan(k, &dist, &active, &mut nn, &mut nn_dist);
                } else {
                    let d = dist[k * n + i];
                    if d < nn_dist[k] || (d == nn_dist[k] && i < nn[k]) {
                        nn[k] = i;
                        nn_dist[k] = d;
                    }
                }
            } else if k < j && nn[k] == j {
                rescan(k, &dist, &active, &mut nn, &mut nn_dist);
            }
        }
        rescan(i, &dist, &active, &mut nn, &mut nn_dist);
    }

    Ok(Dendrogram {
        labels: matrix.users().to_vec(),
        merges,
    })
}

/// Clusters are the maximal subtrees whose merges all lie strictly below `height`.
pub fn cut_dendrogram(d: &Dendrogram, height: f64) -> Result<Partition> {
    if height.is_nan() || height < 0.0 {
        return Err(Error::arg(format!(
            "cut height {height} must be nonnegative"
        )));
    }
    let n = d.leaves();
    let mut parent: Vec<usize> = (0..n + d.merges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (t, m) in d.merges.iter().enumerate() {
        if m.height < height {
            let node = n + t;
            let (a, b) = (find(&mut parent, m.left), find(&mut parent, m.right));
            parent[a] = node;
            parent[b] = node;
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    Ok(Partition::from_labels(&roots))
}

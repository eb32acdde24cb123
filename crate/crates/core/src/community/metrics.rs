use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Partition;
use crate::error::{Error, Result};
use crate::similarity::{Edge, SimilarityGraph};

/// Unweighted Newman modularity `Σ_c (e_cc − a_c²)`.
pub fn modularity(graph: &SimilarityGraph, partition: &Partition) -> Result<f64> {
    let m = graph.edge_count();
    if m == 0 {
        return Err(Error::UndefinedModularity);
    }
    if partition.len() != graph.vertex_count() {
        return Err(Error::arg(format!(
            "partition covers {} vertices, graph has {}",
            partition.len(),
            graph.vertex_count()
        )));
    }
    let k = partition.community_count();
    let mut inside = vec![0usize; k];
    let mut ends = vec![0usize; k];
    for e in graph.edges() {
        let (cu, cv) = (partition.community_of(e.u), partition.community_of(e.v));
        ends[cu] += 1;
        ends[cv] += 1;
        if cu == cv {
            inside[cu] += 1;
        }
    }
    let m = m as f64;
    Ok(inside
        .iter()
        .zip(&ends)
        .map(|(&e, &d)| {
            let a = d as f64 / (2.0 * m);
            e as f64 / m - a * a
        })
        .sum())
}

/// How vertices with fewer than two neighbors enter the average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowDegree {
    /// They count as 0.
    #[default]
    Zero,
    /// They are left out of the mean.
    Exclude,
}

/// Mean local clustering coefficient.
pub fn clustering_coefficient(graph: &SimilarityGraph, low_degree: LowDegree) -> f64 {
    let adj = graph.adjacency();
    let n = adj.len();
    if n == 0 {
        return 0.0;
    }
    let local: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |mark, v| {
                let nb = &adj[v];
                let d = nb.len();
                if d < 2 {
                    return None;
                }
                for &(w, _) in nb {
                    mark[w] = true;
                }
                let mut links = 0usize;
                for &(w, _) in nb {
                    links += adj[w].iter().filter(|&&(x, _)| mark[x]).count();
                }
                for &(w, _) in nb {
                    mark[w] = false;
                }
                // Each neighbor link was seen from both ends.
                Some((links / 2) as f64 / (d * (d - 1) / 2) as f64)
            },
        )
        .collect();
    let (sum, count) = match low_degree {
        LowDegree::Zero => (local.iter().flatten().sum::<f64>(), n),
        LowDegree::Exclude => (
            local.iter().flatten().sum::<f64>(),
            local.iter().flatten().count(),
        ),
    };
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Hop count.
    Unweighted,
    /// Edge length `1 − weight`.
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathStats {
    pub mean: f64,
    pub connected_pairs: u64,
    pub disconnected_pairs: u64,
}

/// Mean shortest-path distance over connected unordered pairs.
pub fn avg_path_length(graph: &SimilarityGraph, mode: PathMode) -> Result<PathStats> {
    let sources: Vec<usize> = (0..graph.vertex_count()).collect();
    avg_path_length_from(graph, mode, &sources)
}

/// Like [`avg_path_length`] but only over pairs starting at `sources`.
///
/// With every vertex as a source this is exact; a subset gives an estimate
/// over the ordered pairs it covers.
pub fn avg_path_length_from(
    graph: &SimilarityGraph,
    mode: PathMode,
    sources: &[usize],
) -> Result<PathStats> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(Error::arg("path length of an empty graph"));
    }
    let adj = graph.adjacency();
    let edges = graph.edges();
    let per_source: Vec<(f64, u64)> = sources
        .par_iter()
        .map_init(
            || vec![f64::INFINITY; n],
            |dist, &s| {
                match mode {
                    PathMode::Unweighted => bfs(&adj, s, dist),
                    PathMode::Weighted => dijkstra(&adj, edges, s, dist),
                }
                let mut sum = 0.0;
                let mut reached = 0u64;
                for (t, d) in dist.iter_mut().enumerate() {
                    if t != s && d.is_finite() {
                        sum += *d;
                        reached += 1;
                    }
                    *d = f64::INFINITY;
                }
                (sum, reached)
            },
        )
        .collect();
    let total: f64 = per_source.iter().map(|p| p.0).sum();
    let reached: u64 = per_source.iter().map(|p| p.1).sum();
    let ordered = sources.len() as u64 * (n as u64 - 1);
    if reached == 0 {
        return Err(Error::UndefinedPath);
    }
    // Ordered pairs counted from the sampled side; report unordered counts
    // when every vertex was a source.
    let (connected, disconnected) = if sources.len() == n {
        (reached / 2, (ordered - reached) / 2)
    } else {
        (reached, ordered - reached)
    };
    Ok(PathStats {
        mean: total / reached as f64,
        connected_pairs: connected,
        disconnected_pairs: disconnected,
    })
}

fn bfs(adj: &[Vec<(usize, usize)>], s: usize, dist: &mut [f64]) {
    let mut queue = std::collections::VecDeque::new();
    dist[s] = 0.0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &adj[v] {
            if dist[w].is_infinite() {
                dist[w] = dist[v] + 1.0;
                queue.push_back(w);
            }
        }
    }
}

fn dijkstra(adj: &[Vec<(usize, usize)>], edges: &[Edge], s: usize, dist: &mut [f64]) {
    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((Key(0.0), s)));
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in &adj[v] {
            let nd = d + (1.0 - edges[e].weight).max(0.0);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Key(nd), w)));
            }
        }
    }
}

/// Uniform simple graph with exactly `m` edges on `n` vertices, unit weights.
pub fn random_baseline(n: usize, m: usize, seed: u64) -> Result<SimilarityGraph> {
    let max = n * n.saturating_sub(1) / 2;
    if m > max {
        return Err(Error::arg(format!(
            "{m} edges do not fit on {n} vertices (max {max})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, max, m).into_vec();
    picked.sort_unstable();
    let edges = unrank_sorted(&picked, n)
        .into_iter()
        .map(|(u, v)| Edge { u, v, weight: 1.0 })
        .collect();
    SimilarityGraph::from_edges((0..n).map(|i| format!("r{i}")).collect(), edges, 0.0)
}

/// Inverse of the row-major ranking of pairs `u < v`; `ranks` must be sorted.
fn unrank_sorted(ranks: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut u = 0;
    let mut row_start = 0;
    ranks
        .iter()
        .map(|&k| {
            while k >= row_start + (n - 1 - u) {
                row_start += n - 1 - u;
                u += 1;
            }
            (u, u + 1 + (k - row_start))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, pairs: &[(usize, usize)]) -> SimilarityGraph {
        SimilarityGraph::unweighted(n, pairs).unwrap()
    }

    fn barbell() -> SimilarityGraph {
        g(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])
    }

    #[test]
    fn modularity_examples() {
        let b = barbell();
        assert_eq!(modularity(&b, &Partition::single(6)).unwrap(), 0.0);
        let halves = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        assert!((modularity(&b, &halves).unwrap() - 5.0 / 14.0).abs() < 1e-12);
        assert!(modularity(&g(3, &[]), &Partition::single(3)).is_err());
        assert!(modularity(&b, &Partition::single(5)).is_err());
    }

    #[test]
    fn clustering_examples() {
        let tri = g(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(clustering_coefficient(&tri, LowDegree::Zero), 1.0);
        let star = g(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(clustering_coefficient(&star, LowDegree::Zero), 0.0);
        // Four triangle-only vertices at 1, two bridge ends at 1/3.
        assert!((clustering_coefficient(&barbell(), LowDegree::Zero) - 7.0 / 9.0).abs() < 1e-12);
        assert_eq!(clustering_coefficient(&g(0, &[]), LowDegree::Zero), 0.0);

        let tri_plus_leaf = g(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        let zero = clustering_coefficient(&tri_plus_leaf, LowDegree::Zero);
        let excl = clustering_coefficient(&tri_plus_leaf, LowDegree::Exclude);
        assert!((zero - (1.0 + 1.0 + 1.0 / 3.0) / 4.0).abs() < 1e-12);
        assert!((excl - (1.0 + 1.0 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_length_examples() {
        let tri = g(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(
            avg_path_length(&tri, PathMode::Unweighted).unwrap().mean,
            1.0
        );
        let path = g(3, &[(0, 1), (1, 2)]);
        assert!(
            (avg_path_length(&path, PathMode::Unweighted).unwrap().mean - 4.0 / 3.0).abs() < 1e-12
        );

        let two = g(4, &[(0, 1), (2, 3)]);
        let st = avg_path_length(&two, PathMode::Unweighted).unwrap();
        assert_eq!((st.connected_pairs, st.disconnected_pairs), (2, 4));
        assert!(matches!(
            avg_path_length(&g(3, &[]), PathMode::Unweighted),
            Err(Error::UndefinedPath)
        ));
    }

    #[test]
    fn weighted_path_prefers_strong_edges() {
        let edges = vec![
            Edge {
                u: 0,
                v: 1,
                weight: 0.9,
            },
            Edge {
                u: 1,
                v: 2,
                weight: 0.9,
            },
            Edge {
                u: 0,
                v: 2,
                weight: 0.5,
            },
        ];
        let names = (0..3).map(|i| i.to_string()).collect();
        let gr = SimilarityGraph::from_edges(names, edges, 0.5).unwrap();
        // 0-1: 0.1, 1-2: 0.1, 0-2: min(0.5, 0.2) = 0.2
        let st = avg_path_length(&gr, PathMode::Weighted).unwrap();
        assert!((st.mean - 0.4 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_baseline_shapes() {
        let tri = random_baseline(3, 3, 1).unwrap();
        assert_eq!(tri.edge_count(), 3);
        assert_eq!(random_baseline(100, 0, 1).unwrap().edge_count(), 0);
        assert!(random_baseline(4, 7, 1).is_err());
        let a = random_baseline(50, 200, 9).unwrap();
        let b = random_baseline(50, 200, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 200);
    }

    #[test]
    fn unrank_covers_all_pairs() {
        let n = 6;
        let pairs = unrank_sorted(&(0..15).collect::<Vec<_>>(), n);
        let expect: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        assert_eq!(pairs, expect);
    }
}

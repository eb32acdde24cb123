use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::similarity::SimilarityGraph;

const SOURCES_PER_TASK: usize = 16;

/// Reusable BFS buffers for Brandes' accumulation.
pub(crate) struct Brandes {
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<usize>,
}

impl Brandes {
    pub(crate) fn new(n: usize) -> Self {
        Brandes {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
        }
    }

    /// Add the ordered-pair dependencies rooted at `s` into `scores`.
    pub(crate) fn accumulate(
        &mut self,
        adj: &[Vec<(usize, usize)>],
        alive: &[bool],
        s: usize,
        scores: &mut [f64],
    ) {
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.order.push(s);
        let mut head = 0;
        while head < self.order.len() {
            let v = self.order[head];
            head += 1;
            for &(w, e) in &adj[v] {
                if !alive[e] {
                    continue;
                }
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.order.push(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        for idx in (0..self.order.len()).rev() {
            let w = self.order[idx];
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &(v, e) in &adj[w] {
                if alive[e] && self.dist[v] == self.dist[w] - 1 {
                    let c = self.sigma[v] * coeff;
                    scores[e] += c;
                    self.delta[v] += c;
                }
            }
        }
        for &v in &self.order {
            self.dist[v] = -1;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
        }
    }
}

/// Unordered-pair edge betweenness from the given sources, over alive edges.
///
/// Sources are processed in fixed-size tasks whose partial sums are added in
/// source order, so the result does not depend on thread scheduling.
pub(crate) fn betweenness_from(
    adj: &[Vec<(usize, usize)>],
    alive: &[bool],
    sources: &[usize],
    edge_count: usize,
) -> Vec<f64> {
    let n = adj.len();
    let mut total = vec![0.0; edge_count];
    let batch = SOURCES_PER_TASK * rayon::current_num_threads().max(1);
    for group in sources.chunks(batch) {
        let partials: Vec<Vec<f64>> = group
            .par_chunks(SOURCES_PER_TASK)
            .map(|chunk| {
                let mut brandes = Brandes::new(n);
                let mut local = vec![0.0; edge_count];
                for &s in chunk {
                    brandes.accumulate(adj, alive, s, &mut local);
                }
                local
            })
            .collect();
        for p in partials {
            for (t, x) in total.iter_mut().zip(p) {
                *t += x;
            }
        }
    }
    for t in &mut total {
        *t *= 0.5;
    }
    total
}

/// Shortest-path betweenness of every edge, indexed like `graph.edges()`.
///
/// For each unordered vertex pair, each shortest path contributes
/// `1 / (number of shortest paths)` to every edge on it. Edge weights are
/// ignored; path length is the hop count.
pub fn edge_betweenness(graph: &SimilarityGraph) -> Result<Vec<f64>> {
    if graph.edge_count() == 0 {
        return Err(Error::arg("edge betweenness needs at least one edge"));
    }
    let adj = graph.adjacency();
    let alive = vec![true; graph.edge_count()];
    let sources: Vec<usize> = (0..graph.vertex_count()).collect();
    Ok(betweenness_from(&adj, &alive, &sources, graph.edge_count()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn barbell() -> SimilarityGraph {
        SimilarityGraph::unweighted(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)])
            .unwrap()
    }

    #[test]
    fn single_edge() {
        let g = SimilarityGraph::unweighted(2, &[(0, 1)]).unwrap();
        assert_eq!(edge_betweenness(&g).unwrap(), [1.0]);
    }

    #[test]
    fn path_of_three() {
        let g = SimilarityGraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(edge_betweenness(&g).unwrap(), [2.0, 2.0]);
    }

    #[test]
    fn barbell_bridge() {
        let b = edge_betweenness(&barbell()).unwrap();
        assert!((b[3] - 9.0).abs() < 1e-12);
        // Triangle edges: the far edge carries only its own pair.
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn square_splits_paths_evenly() {
        let g = SimilarityGraph::unweighted(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        // Each edge: its own pair (1) + two half-paths of length-2 pairs.
        assert_eq!(edge_betweenness(&g).unwrap(), [2.0; 4]);
    }

    #[test]
    fn edgeless_is_an_error() {
        let g = SimilarityGraph::unweighted(3, &[]).unwrap();
        assert!(edge_betweenness(&g).is_err());
    }
}

//! Divisive community detection by repeated removal of the highest-betweenness
//! edge.
//!
//! Betweenness is recomputed after every removal, but only inside the
//! component that lost the edge; scores elsewhere cannot change.
//!
//! A component that is a complete graph, with every member still holding all
//! of its original edges, is never split: any partition of such a component
//! has lower modularity than keeping it whole, so its removals can only
//! produce worse candidates.

use super::betweenness::betweenness_from;
use super::{components, metrics, Partition};
use crate::error::{Error, Result};
use crate::similarity::SimilarityGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GnOptions {
    /// Stop after this many consecutive splits without a modularity gain.
    pub patience: Option<usize>,
    /// Skip removals inside untouched complete components.
    pub freeze_cliques: bool,
}

impl Default for GnOptions {
    fn default() -> Self {
        GnOptions {
            patience: None,
            freeze_cliques: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRecord {
    /// Edges removed when this partition appeared.
    pub removals: usize,
    pub communities: usize,
    pub modularity: f64,
}

#[derive(Clone, Debug)]
pub struct GirvanNewman {
    /// Removed edge indices in removal order.
    pub removed: Vec<usize>,
    /// One record per component-count increase, starting with the input's
    /// own components.
    pub splits: Vec<SplitRecord>,
    pub best: Partition,
    pub best_modularity: f64,
    pub stopped_early: bool,
}

pub fn girvan_newman(graph: &SimilarityGraph) -> Result<GirvanNewman> {
    girvan_newman_with(graph, &GnOptions::default())
}

pub fn girvan_newman_with(graph: &SimilarityGraph, opts: &GnOptions) -> Result<GirvanNewman> {
    let n = graph.vertex_count();
    let m = graph.edge_count();
    if n < 2 {
        return Err(Error::arg("community detection needs at least 2 vertices"));
    }
    if m == 0 {
        return Err(Error::UndefinedModularity);
    }
    let adj = graph.adjacency();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; m];
    let mut alive_degree = degree.clone();

    let mut label = components(&adj, &alive);
    let mut count = label.iter().max().map_or(0, |&l| l + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &l) in label.iter().enumerate() {
        members[l].push(v);
    }

    let frozen_test = |members: &[usize], alive_degree: &[usize]| -> bool {
        let s = members.len();
        opts.freeze_cliques
            && members
                .iter()
                .all(|&v| alive_degree[v] == degree[v] && degree[v] == s - 1)
    };
    let mut frozen: Vec<bool> = members
        .iter()
        .map(|c| frozen_test(c, &alive_degree))
        .collect();

    let mut scores = vec![0.0; m];
    for (c, verts) in members.iter().enumerate() {
        if !frozen[c] {
            add_component_scores(&adj, &alive, verts, &mut scores);
        }
    }

    let first = Partition::from_labels(&label);
    let q0 = metrics::modularity(graph, &first)?;
    let mut splits = vec![SplitRecord {
        removals: 0,
        communities: count,
        modularity: q0,
    }];
    let mut best = first;
    let mut best_q = q0;
    let mut since_gain = 0usize;
    let mut removed = Vec::new();
    let mut stopped_early = false;
    let edges = graph.edges();

    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    loop {
        let mut pick: Option<usize> = None;
        for (e, &b) in scores.iter().enumerate() {
            if !alive[e] || frozen[label[edges[e].u]] {
                continue;
            }
            match pick {
                None => pick = Some(e),
                Some(p) => {
                    let tol = 1e-9 * scores[p].abs().max(1.0);
                    if b > scores[p] + tol {
                        pick = Some(e);
                    }
                }
            }
        }
        let Some(e) = pick else { break };
        alive[e] = false;
        removed.push(e);
        let (u, v) = (edges[e].u, edges[e].v);
        alive_degree[u] -= 1;
        alive_degree[v] -= 1;
        let c = label[u];

        for &x in &members[c] {
            for &(_, f) in &adj[x] {
                scores[f] = 0.0;
            }
        }

        // Reachability from u inside the old component.
        seen[u] = true;
        stack.push(u);
        let mut reach = vec![u];
        while let Some(x) = stack.pop() {
            for &(w, f) in &adj[x] {
                if alive[f] && !seen[w] {
                    seen[w] = true;
                    reach.push(w);
                    stack.push(w);
                }
            }
        }
        let split = !seen[v];
        let mut affected = vec![c];
        if split {
            let (keep, moved): (Vec<usize>, Vec<usize>) =
                members[c].iter().partition(|&&x| seen[x]);
            for &x in &moved {
                label[x] = count;
            }
            members[c] = keep;
            members.push(moved);
            frozen.push(false);
            affected.push(count);
            count += 1;
        }
        for &x in &reach {
            seen[x] = false;
        }
        for &a in &affected {
            frozen[a] = frozen_test(&members[a], &alive_degree);
            if !frozen[a] {
                add_component_scores(&adj, &alive, &members[a], &mut scores);
            }
        }

        if split {
            let part = Partition::from_labels(&label);
            let q = metrics::modularity(graph, &part)?;
            splits.push(SplitRecord {
                removals: removed.len(),
                communities: count,
                modularity: q,
            });
            if q > best_q + 1e-12 {
                best_q = q;
                best = part;
                since_gain = 0;
            } else {
                since_gain += 1;
                if opts.patience.is_some_and(|p| since_gain >= p) {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    Ok(GirvanNewman {
        removed,
        splits,
        best,
        best_modularity: best_q,
        stopped_early,
    })
}

fn add_component_scores(
    adj: &[Vec<(usize, usize)>],
    alive: &[bool],
    verts: &[usize],
    scores: &mut [f64],
) {
    if verts.len() < 2 {
        return;
    }
    let part = betweenness_from(adj, alive, verts, scores.len());
    for &x in verts {
        for &(_, f) in &adj[x] {
            if alive[f] {
                scores[f] = part[f];
            }
        }
    }
}

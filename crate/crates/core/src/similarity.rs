//! Weighted-cosine behavioral similarity and its population-level summaries.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::BehavioralProfile;

/// Common support positions of two profiles, as index pairs into their
/// compacted vectors.
fn shared_positions(x: &BehavioralProfile, y: &BehavioralProfile) -> Vec<(usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.support.len() && j < y.support.len() {
        match x.support[i].cmp(&y.support[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// `Σ_i Σ_j w_xi · w_yj · |x_i · y_j|` over the kept components.
///
/// The result is bit-for-bit symmetric in its arguments and lies in `[0, 1]`.
pub fn pairwise_similarity(x: &BehavioralProfile, y: &BehavioralProfile) -> Result<f64> {
    if x.universe != y.universe || x.dimension != y.dimension {
        return Err(Error::Consistency(format!(
            "profiles of {} and {} use different location universes",
            x.user, y.user
        )));
    }
    let shared = shared_positions(x, y);
    if shared.is_empty() {
        return Ok(0.0);
    }
    let mut terms = Vec::with_capacity(x.components() * y.components());
    for (xv, xw) in x.vectors.iter().zip(&x.weights) {
        for (yv, yw) in y.vectors.iter().zip(&y.weights) {
            let dot: f64 = shared.iter().map(|&(a, b)| xv[a] * yv[b]).sum();
            terms.push(xw * yw * dot.abs());
        }
    }
    // Summing in value order makes the result independent of argument order.
    if terms.len() > 1 {
        terms.sort_by(f64::total_cmp);
    }
    Ok(terms.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// Dense symmetric `m × m` score matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    users: Vec<String>,
    scores: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wrap precomputed scores given row-major; checks symmetry and range.
    pub fn from_scores(users: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        let m = users.len();
        if scores.len() != m * m {
            return Err(Error::arg(format!(
                "expected {} scores, got {}",
                m * m,
                scores.len()
            )));
        }
        for i in 0..m {
            for j in 0..m {
                let s = scores[i * m + j];
                if !(0.0..=1.0).contains(&s) || s != scores[j * m + i] {
                    return Err(Error::arg(format!(
                        "score ({i},{j}) = {s} breaks symmetry or range"
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { users, scores })
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.users.len() + j]
    }

    pub fn pair_count(&self) -> usize {
        let m = self.len();
        m * m.saturating_sub(1) / 2
    }

    /// Scores with `i < j`, row by row.
    pub fn upper_triangle(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.len();
        (0..m).flat_map(move |i| (i + 1..m).map(move |j| self.get(i, j)))
    }
}

/// All pairs of `profiles`, computed in parallel by row.
pub fn similarity_matrix(profiles: &[BehavioralProfile]) -> Result<SimilarityMatrix> {
    let m = profiles.len();
    if m < 2 {
        return Err(Error::arg(format!(
            "fewer than 2 users for similarity (got {m})"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i..m)
                .map(|j| pairwise_similarity(&profiles[i], &profiles[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![0.0; m * m];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, s) in row.into_iter().enumerate() {
            let j = i + off;
            scores[i * m + j] = s;
            scores[j * m + i] = s;
        }
    }
    Ok(SimilarityMatrix {
        users: profiles.iter().map(|p| p.user.clone()).collect(),
        scores,
    })
}

/// Pair counts over equal-width bins of `[0, 1]`; the last bin is closed.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl ScoreHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts divided by the total; all zeros when there are no pairs.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.bins()];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    /// Total-variation distance between the normalized histograms.
    pub fn total_variation(&self, other: &ScoreHistogram) -> Result<f64> {
        if self.bins() != other.bins() {
            return Err(Error::arg("histograms have different bin counts"));
        }
        let (a, b) = (self.normalized(), other.normalized());
        Ok(0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>())
    }

    /// `bin_low,bin_high,count`
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_low,bin_high,count")?;
        for (b, c) in self.counts.iter().enumerate() {
            writeln!(
                out,
                "{:.4},{:.4},{}",
                self.bin_edges[b],
                self.bin_edges[b + 1],
                c
            )?;
        }
        Ok(())
    }

    /// `bin_low,bin_high,fraction,log10_fraction`; empty bins have an empty log cell.
    pub fn write_normalized_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_low,bin_high,fraction,log10_fraction")?;
        for (b, f) in self.normalized().into_iter().enumerate() {
            let log = if f > 0.0 {
                format!("{:.6}", f.log10())
            } else {
                String::new()
            };
            writeln!(
                out,
                "{:.4},{:.4},{:.8},{}",
                self.bin_edges[b],
                self.bin_edges[b + 1],
                f,
                log
            )?;
        }
        Ok(())
    }
}

pub fn histogram_of<I: IntoIterator<Item = f64>>(scores: I, bins: usize) -> Result<ScoreHistogram> {
    if bins == 0 {
        return Err(Error::arg("histogram needs at least one bin"));
    }
    let mut counts = vec![0u64; bins];
    for s in scores {
        let b = ((s * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let bin_edges = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    Ok(ScoreHistogram { bin_edges, counts })
}

/// Histogram of the upper-triangle scores.
pub fn similarity_histogram(matrix: &SimilarityMatrix, bins: usize) -> Result<ScoreHistogram> {
    histogram_of(matrix.upper_triangle(), bins)
}

/// `(score, fraction of pairs ≤ score)` at each distinct score, ascending.
pub fn cdf_of(mut scores: Vec<f64>) -> Result<Vec<(f64, f64)>> {
    if scores.is_empty() {
        return Err(Error::arg("cdf needs at least one pair"));
    }
    scores.sort_by(f64::total_cmp);
    let n = scores.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *s => last.1 = frac,
            _ => out.push((*s, frac)),
        }
    }
    Ok(out)
}

pub fn similarity_cdf(matrix: &SimilarityMatrix) -> Result<Vec<(f64, f64)>> {
    cdf_of(matrix.upper_triangle().collect())
}

/// Fraction of pairs with score ≤ `x`, read off a step CDF.
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    match cdf.partition_point(|&(s, _)| s <= x) {
        0 => 0.0,
        i => cdf[i - 1].1,
    }
}

/// `score,cum_fraction`. Scores are printed to 6 decimals and rows that
/// print identically are collapsed to their last cumulative value.
pub fn write_cdf_csv<W: Write>(cdf: &[(f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "score,cum_fraction")?;
    let mut pending: Option<(String, f64)> = None;
    for &(s, f) in cdf {
        let key = format!("{s:.6}");
        match &mut pending {
            Some((k, v)) if *k == key => *v = f,
            _ => {
                if let Some((k, v)) = pending.take() {
                    writeln!(out, "{k},{v:.8}")?;
                }
                pending = Some((key, f));
            }
        }
    }
    if let Some((k, v)) = pending {
        writeln!(out, "{k},{v:.8}")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected weighted graph over user indices; no self-loops or duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    threshold: f64,
}

impl SimilarityGraph {
    /// Build from arbitrary edges; endpoints are reordered so `u < v` and
    /// edges are sorted.
    pub fn from_edges(vertices: Vec<String>, edges: Vec<Edge>, threshold: f64) -> Result<Self> {
        let n = vertices.len();
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| {
                if e.u > e.v {
                    Edge {
                        u: e.v,
                        v: e.u,
                        ..e
                    }
                } else {
                    e
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        for (i, e) in edges.iter().enumerate() {
            if e.u == e.v || e.v >= n {
                return Err(Error::arg(format!("bad edge ({}, {})", e.u, e.v)));
            }
            if i > 0 && (edges[i - 1].u, edges[i - 1].v) == (e.u, e.v) {
                return Err(Error::arg(format!("duplicate edge ({}, {})", e.u, e.v)));
            }
        }
        Ok(SimilarityGraph {
            vertices,
            edges,
            threshold,
        })
    }

    /// Unit-weight graph on vertices named `0..n`.
    pub fn unweighted(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(u, v)| Edge { u, v, weight: 1.0 })
            .collect();
        SimilarityGraph::from_edges((0..n).map(|i| i.to_string()).collect(), edges, 0.0)
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `(neighbor, edge index)` lists per vertex, neighbors ascending.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (id, e) in self.edges.iter().enumerate() {
            adj[e.u].push((e.v, id));
            adj[e.v].push((e.u, id));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Edge list text, one `u v weight` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(
                out,
                "{} {} {:.6}",
                self.vertices[e.u], self.vertices[e.v], e.weight
            )?;
        }
        Ok(())
    }
}

/// Edge `(i, j)` iff `score ≥ threshold`; isolated vertices are kept.
pub fn build_similarity_graph(
    matrix: &SimilarityMatrix,
    threshold: f64,
) -> Result<SimilarityGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::arg(format!(
            "graph threshold {threshold} outside [0, 1]"
        )));
    }
    let m = matrix.len();
    let mut edges = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let s = matrix.get(i, j);
            if s >= threshold {
                edges.push(Edge {
                    u: i,
                    v: j,
                    weight: s,
                });
            }
        }
    }
    Ok(SimilarityGraph {
        vertices: matrix.users().to_vec(),
        edges,
        threshold,
    })
}

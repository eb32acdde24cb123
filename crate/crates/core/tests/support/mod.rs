//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's algorithms; each routine is the
//! slow, obvious version of what it checks.

#![allow(dead_code, clippy::needless_range_loop)]

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let scale: f64 = m
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// `AᵀA` of a row-major matrix.
pub fn gram(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut g = vec![vec![0.0; cols]; cols];
    for r in rows {
        for i in 0..cols {
            if r[i] == 0.0 {
                continue;
            }
            for j in 0..cols {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    g
}

/// Undirected simple graph as an adjacency bitmask per vertex (n ≤ 16).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    pub n: usize,
    pub adj: Vec<u16>,
}

impl SmallGraph {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adj[i] >> j & 1 == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn has(&self, i: usize, j: usize) -> bool {
        self.adj[i] >> j & 1 == 1
    }

    /// Color refinement with canonically numbered colors.
    fn refined_colors(&self) -> Vec<usize> {
        let n = self.n;
        let mut color = vec![0usize; n];
        loop {
            let sigs: Vec<(usize, Vec<usize>)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<usize> = (0..n)
                        .filter(|&w| self.has(v, w))
                        .map(|w| color[w])
                        .collect();
                    nb.sort_unstable();
                    (color[v], nb)
                })
                .collect();
            let mut distinct = sigs.clone();
            distinct.sort();
            distinct.dedup();
            let next: Vec<usize> = sigs
                .iter()
                .map(|s| distinct.binary_search(s).unwrap())
                .collect();
            let before = color
                .iter()
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            if distinct.len() == before {
                return next;
            }
            color = next;
        }
    }

    /// Canonical form: the lexicographically largest adjacency code over all
    /// vertex orders that list color classes in color order.
    pub fn canonical(&self) -> SmallGraph {
        let n = self.n;
        let color = self.refined_colors();
        let mut slots: Vec<usize> = (0..n).collect();
        slots.sort_by_key(|&v| color[v]);
        let slot_color: Vec<usize> = slots.iter().map(|&v| color[v]).collect();

        let mut best: Option<Vec<bool>> = None;
        let mut best_order = Vec::new();
        let mut order = Vec::with_capacity(n);
        let mut used = vec![false; n];
        let mut code = Vec::with_capacity(n * n / 2);
        self.search(
            &slot_color,
            &color,
            &mut order,
            &mut used,
            &mut code,
            &mut best,
            &mut best_order,
        );

        let pos: Vec<usize> = {
            let mut p = vec![0; n];
            for (i, &v) in best_order.iter().enumerate() {
                p[v] = i;
            }
            p
        };
        let mut adj = vec![0u16; n];
        for (i, j) in self.edges() {
            adj[pos[i]] |= 1 << pos[j];
            adj[pos[j]] |= 1 << pos[i];
        }
        SmallGraph { n, adj }
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        slot_color: &[usize],
        color: &[usize],
        order: &mut Vec<usize>,
        used: &mut [bool],
        code: &mut Vec<bool>,
        best: &mut Option<Vec<bool>>,
        best_order: &mut Vec<usize>,
    ) {
        let k = order.len();
        if k == self.n {
            if best.as_ref().is_none_or(|b| code.as_slice() > b.as_slice()) {
                *best = Some(code.clone());
                *best_order = order.clone();
            }
            return;
        }
        for v in 0..self.n {
            if used[v] || color[v] != slot_color[k] {
                continue;
            }
            let mark = code.len();
            for &u in order.iter() {
                code.push(self.has(u, v));
            }
            if let Some(b) = best.as_ref() {
                if code.as_slice() < &b[..code.len()] {
                    code.truncate(mark);
                    continue;
                }
            }
            used[v] = true;
            order.push(v);
            self.search(slot_color, color, order, used, code, best, best_order);
            order.pop();
            used[v] = false;
            code.truncate(mark);
        }
    }
}

/// All connected simple graphs on `1..=max_n` vertices, one per isomorphism
/// class, grouped by vertex count.
///
/// Every connected graph has a vertex whose removal leaves it connected, so
/// extending each class on `n − 1` vertices by a new vertex joined to every
/// nonempty neighbor subset reaches every class on `n`.
pub fn connected_graphs(max_n: usize) -> Vec<Vec<SmallGraph>> {
    assert!((1..=16).contains(&max_n));
    let mut by_size = vec![vec![SmallGraph { n: 1, adj: vec![0] }]];
    for n in 2..=max_n {
        let mut seen = std::collections::HashSet::new();
        let mut level = Vec::new();
        for g in &by_size[n - 2] {
            for mask in 1u16..(1 << (n - 1)) {
                let mut adj = g.adj.clone();
                adj.push(mask);
                for (i, a) in adj.iter_mut().enumerate().take(n - 1) {
                    if mask >> i & 1 == 1 {
                        *a |= 1 << (n - 1);
                    }
                }
                let c = SmallGraph { n, adj }.canonical();
                if seen.insert(c.clone()) {
                    level.push(c);
                }
            }
        }
        by_size.push(level);
    }
    by_size
}

/// Modularity of a labeling, computed from its definition.
pub fn modularity_of(n: usize, edges: &[(usize, usize)], label: &[usize]) -> f64 {
    let m = edges.len() as f64;
    let mut deg = vec![0.0; n];
    for &(u, v) in edges {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if label[i] != label[j] {
                continue;
            }
            let a = edges
                .iter()
                .filter(|&&(u, v)| (u, v) == (i, j) || (v, u) == (i, j))
                .count() as f64;
            q += a - deg[i] * deg[j] / (2.0 * m);
        }
    }
    q / (2.0 * m)
}

/// Best modularity over every set partition (restricted growth strings).
pub fn max_modularity(n: usize, edges: &[(usize, usize)]) -> f64 {
    let m = edges.len() as f64;
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut label = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    let mut inner = vec![0usize; n];
    let mut dsum = vec![0usize; n];
    loop {
        inner.iter_mut().for_each(|x| *x = 0);
        dsum.iter_mut().for_each(|x| *x = 0);
        for &(u, v) in edges {
            if label[u] == label[v] {
                inner[label[u]] += 1;
            }
        }
        for v in 0..n {
            dsum[label[v]] += deg[v];
        }
        let q: f64 = (0..n)
            .map(|c| inner[c] as f64 / m - (dsum[c] as f64 / (2.0 * m)).powi(2))
            .sum();
        best = best.max(q);

        // Next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return best;
            }
            let max_prev = *label[..i].iter().max().unwrap();
            if label[i] <= max_prev {
                label[i] += 1;
                for l in &mut label[i + 1..] {
                    *l = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// BFS distances and shortest-path counts from `s`.
fn bfs_counts(n: usize, adj: &[Vec<usize>], s: usize) -> (Vec<i64>, Vec<f64>) {
    let mut dist = vec![-1; n];
    let mut sigma = vec![0.0; n];
    dist[s] = 0;
    sigma[s] = 1.0;
    let mut q = std::collections::VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                q.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
            }
        }
    }
    (dist, sigma)
}

/// Edge betweenness over unordered pairs straight from the definition.
pub fn brute_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let all: Vec<(Vec<i64>, Vec<f64>)> = (0..n).map(|s| bfs_counts(n, &adj, s)).collect();
    let mut out = vec![0.0; edges.len()];
    for s in 0..n {
        for t in s + 1..n {
            let (ds, ss) = &all[s];
            let (dt, st) = &all[t];
            if ds[t] < 0 {
                continue;
            }
            for (k, &(u, v)) in edges.iter().enumerate() {
                for (a, b) in [(u, v), (v, u)] {
                    if ds[a] >= 0 && dt[b] >= 0 && ds[a] + 1 + dt[b] == ds[t] {
                        out[k] += ss[a] * st[b] / ss[t];
                    }
                }
            }
        }
    }
    out
}

/// All-pairs shortest path lengths by Floyd–Warshall; `f64::INFINITY` when
/// unreachable.
pub fn floyd(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Average-linkage merge heights by recomputing every cluster distance from
/// leaf pairs at each step.
pub fn naive_average_linkage(dist: &[Vec<f64>]) -> Vec<f64> {
    let mut clusters: Vec<Vec<usize>> = (0..dist.len()).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let total: f64 = clusters[a]
                    .iter()
                    .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| dist[i][j])
                    .sum();
                let d = total / (clusters[a].len() * clusters[b].len()) as f64;
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        let (d, a, b) = best;
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        heights.push(d);
    }
    heights
}

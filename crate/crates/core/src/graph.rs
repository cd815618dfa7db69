//! Undirected simple graphs: random generators, deterministic families,
//! edge-list ingestion and the structural queries used by the ordering and
//! analysis code.
//!
//! Vertices are dense indices `0..n`. Adjacency lists are kept sorted, which
//! makes `has_edge` a binary search and keeps every scan over neighbors in
//! ascending index order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Counts reported by [`load_edge_list`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    /// Edge lines read, before any filtering.
    pub raw_edges: usize,
    pub self_loops: usize,
    /// Repeated edges (in either direction) after the first occurrence.
    pub duplicates: usize,
}

/// How a graph was produced. Some orderings need the structure this carries.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Generic,
    ErdosRenyi { p: f64 },
    /// Vertex index equals arrival index; vertices `0..=k` form the seed clique.
    PreferentialAttachment { k: usize },
    /// Vertex `(row, col)` is index `row * side + col`, both 0-based.
    Grid { side: usize },
    /// Vertex `(rank, pos)` is index `rank * 2^k + pos`.
    Butterfly { k: usize },
    EdgeList(LoadStats),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edges: usize,
    family: Family,
    labels: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Duplicate edges are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::param("n", "a graph needs at least one vertex"));
        }
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(
                    "edges",
                    format!("edge ({u}, {v}) out of range for n = {n}"),
                ));
            }
            if u == v {
                return Err(Error::param("edges", format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_adjacency(adj, Family::Generic))
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>, family: Family) -> Self {
        let mut twice = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Graph {
            adj,
            edges: twice / 2,
            family,
            labels: None,
        }
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_edges(n, std::iter::empty())
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|v| (v - 1, v)))
    }

    /// Star with center 0 and leaves `1..n`.
    pub fn star(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|v| (0, v)))
    }

    /// Circulant graph: `i ~ i ± d (mod n)` for every offset `d`.
    /// Offsets `{1, 2}` give a 4-regular graph; `{1, n/2}` with even `n`
    /// gives a 3-regular one.
    pub fn circulant(n: usize, offsets: &[usize]) -> Result<Self> {
        let mut edges = Vec::new();
        for &d in offsets {
            if d == 0 || d > n / 2 {
                return Err(Error::param("offsets", format!("offset {d} invalid for n = {n}")));
            }
            for i in 0..n {
                edges.push((i, (i + d) % n));
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: usize) -> String {
        match &self.labels {
            Some(labels) => labels[v].clone(),
            None => v.to_string(),
        }
    }

    /// Checks the simple/symmetric/in-range invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let mut twice = 0;
        for (v, list) in self.adj.iter().enumerate() {
            twice += list.len();
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::param("adjacency", format!("list of {v} not strictly sorted")));
                }
            }
            for &u in list {
                if u >= n {
                    return Err(Error::param("adjacency", format!("{v} -> {u} out of range")));
                }
                if u == v {
                    return Err(Error::param("adjacency", format!("self-loop at {v}")));
                }
                if !self.has_edge(u, v) {
                    return Err(Error::param("adjacency", format!("{v} -> {u} not symmetric")));
                }
            }
        }
        if twice != 2 * self.edges {
            return Err(Error::param("adjacency", "edge count out of sync"));
        }
        Ok(())
    }

    /// Serializes as one `u v` line per edge, using labels when present.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{} {}", self.label(u), self.label(v));
        }
        out
    }

    /// Arrival index of every vertex; only preferential-attachment graphs
    /// carry one.
    pub fn arrival_order(&self) -> Option<Vec<usize>> {
        match self.family {
            Family::PreferentialAttachment { .. } => Some((0..self.n()).collect()),
            _ => None,
        }
    }

    pub fn grid_side(&self) -> Option<usize> {
        match self.family {
            Family::Grid { side } => Some(side),
            _ => None,
        }
    }

    pub fn butterfly_k(&self) -> Option<usize> {
        match self.family {
            Family::Butterfly { k } => Some(k),
            _ => None,
        }
    }

    /// Butterfly rank of `v`, if this is a butterfly graph.
    pub fn butterfly_rank(&self, v: usize) -> Option<usize> {
        self.butterfly_k().map(|k| v >> k)
    }

    /// Short human-readable family name used in reports.
    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Generic => "generic",
            Family::ErdosRenyi { .. } => "er",
            Family::PreferentialAttachment { .. } => "pa",
            Family::Grid { .. } => "grid",
            Family::Butterfly { .. } => "butterfly",
            Family::EdgeList(_) => "edge-list",
        }
    }
}

/// G(n, p): every unordered pair is an edge independently with probability `p`.
pub fn gen_erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param("p", format!("{p} is not a probability")));
    }
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    Ok(Graph::from_adjacency(adj, Family::ErdosRenyi { p }))
}

/// Preferential attachment seeded with a `(k+1)`-clique. Every later vertex
/// picks `k` distinct earlier targets, each draw proportional to degree, with
/// the degrees frozen at the start of the vertex's batch.
pub fn gen_preferential_attachment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Graph> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if n <= k {
        return Err(Error::param("n", format!("need n > k, got n = {n}, k = {k}")));
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..=k {
        for v in u + 1..=k {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut degree: Vec<u64> = adj.iter().map(|l| l.len() as u64).collect();
    let mut chosen = vec![false; n];
    let mut targets = Vec::with_capacity(k);
    for v in k + 1..n {
        let mut remaining: u64 = degree[..v].iter().sum();
        targets.clear();
        for _ in 0..k {
            let mut r = rng.gen_range(0..remaining);
            let pick = (0..v)
                .filter(|&u| !chosen[u])
                .find(|&u| {
                    if r < degree[u] {
                        true
                    } else {
                        r -= degree[u];
                        false
                    }
                })
                .expect("weights cover the sampled value");
            chosen[pick] = true;
            remaining -= degree[pick];
            targets.push(pick);
        }
        for &u in &targets {
            chosen[u] = false;
            adj[u].push(v);
            adj[v].push(u);
            degree[u] += 1;
        }
        degree[v] = k as u64;
    }
    Ok(Graph::from_adjacency(adj, Family::PreferentialAttachment { k }))
}

/// `side × side` lattice with 4-neighborhood edges.
pub fn gen_grid(side: usize) -> Result<Graph> {
    if side == 0 {
        return Err(Error::param("side", "must be at least 1"));
    }
    let n = side * side;
    let mut adj = vec![Vec::new(); n];
    for row in 0..side {
        for col in 0..side {
            let v = row * side + col;
            if col + 1 < side {
                adj[v].push(v + 1);
                adj[v + 1].push(v);
            }
            if row + 1 < side {
                adj[v].push(v + side);
                adj[v + side].push(v);
            }
        }
    }
    Ok(Graph::from_adjacency(adj, Family::Grid { side }))
}

/// Binary butterfly with ranks `0..=k` and `2^k` positions per rank.
/// `(i, j)` for `i > 0` links to `(i-1, j)` and to `(i-1, j')` where `j'`
/// flips bit `k - i` of `j`.
pub fn gen_butterfly(k: usize) -> Result<Graph> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if k > 24 {
        return Err(Error::param("k", "too large"));
    }
    let width = 1usize << k;
    let mut adj = vec![Vec::new(); (k + 1) * width];
    for rank in 1..=k {
        for pos in 0..width {
            let v = rank * width + pos;
            let straight = (rank - 1) * width + pos;
            let cross = (rank - 1) * width + (pos ^ (1 << (k - rank)));
            for u in [straight, cross] {
                adj[v].push(u);
                adj[u].push(v);
            }
        }
    }
    Ok(Graph::from_adjacency(adj, Family::Butterfly { k }))
}

/// Index of butterfly vertex `(rank, pos)`.
pub fn butterfly_vertex(k: usize, rank: usize, pos: usize) -> usize {
    (rank << k) + pos
}

/// Parses whitespace-separated edge lines. `#`/`%` comment lines and blank
/// lines are skipped. Labels are remapped to `0..n` in first-appearance
/// order; self-loops and duplicate edges are dropped and counted.
pub fn load_edge_list<B: BufRead>(reader: B) -> Result<Graph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut stats = LoadStats::default();
    let mut edges = Vec::new();

    let mut intern = |tok: &str| -> usize {
        if let Some(&i) = index.get(tok) {
            return i;
        }
        let i = labels.len();
        index.insert(tok.to_owned(), i);
        labels.push(tok.to_owned());
        i
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                reason: format!("expected 2 vertex tokens, found {}", tokens.len()),
            });
        }
        stats.raw_edges += 1;
        let u = intern(tokens[0]);
        let v = intern(tokens[1]);
        if u == v {
            stats.self_loops += 1;
            continue;
        }
        if !seen.insert((u.min(v), u.max(v))) {
            stats.duplicates += 1;
            continue;
        }
        edges.push((u, v));
    }

    if labels.is_empty() {
        return Err(Error::EmptyInput("edge list has no edges"));
    }
    let mut adj = vec![Vec::new(); labels.len()];
    for (u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut graph = Graph::from_adjacency(adj, Family::EdgeList(stats));
    graph.labels = Some(labels);
    Ok(graph)
}

pub fn load_edge_list_path(path: impl AsRef<Path>) -> Result<Graph> {
    let file = std::fs::File::open(path)?;
    load_edge_list(std::io::BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentPartition {
    /// Component id per vertex; ids are numbered by smallest member.
    pub ids: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentPartition {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

pub fn connected_components(g: &Graph) -> ComponentPartition {
    let n = g.n();
    let mut ids = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if ids[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        ids[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &u in g.neighbors(v) {
                if ids[u] == usize::MAX {
                    ids[u] = id;
                    queue.push_back(u);
                }
            }
        }
        sizes.push(size);
    }
    ComponentPartition { ids, sizes }
}

/// Breadth-first order from `start` that never enters a `blocked` vertex.
/// Neighbors are expanded in ascending index order. `start` itself is
/// included even if blocked.
pub fn bfs_order(g: &Graph, start: usize, blocked: &[bool]) -> Vec<usize> {
    let mut seen = blocked.to_vec();
    seen[start] = true;
    let mut order = vec![start];
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                order.push(u);
            }
        }
    }
    order
}

/// Greedy independent subset of `N(v)`: scans neighbors in ascending index
/// order and keeps each one not adjacent to anything kept so far, stopping
/// at `m`.
pub fn greedy_independent_neighbors(g: &Graph, v: usize, m: usize) -> Vec<usize> {
    greedy_independent_subset(g, g.neighbors(v).iter().copied(), m)
}

pub(crate) fn greedy_independent_subset<I>(g: &Graph, candidates: I, m: usize) -> Vec<usize>
where
    I: IntoIterator<Item = usize>,
{
    let mut picked: Vec<usize> = Vec::new();
    for u in candidates {
        if picked.len() >= m {
            break;
        }
        if picked.iter().all(|&w| !g.has_edge(u, w)) {
            picked.push(u);
        }
    }
    picked
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeStats {
    pub average: f64,
    pub max: usize,
    pub min: usize,
    /// `histogram[d]` is the number of vertices of degree `d`.
    pub histogram: Vec<usize>,
}

pub fn degree_stats(g: &Graph) -> DegreeStats {
    let max = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0);
    let min = (0..g.n()).map(|v| g.degree(v)).min().unwrap_or(0);
    let mut histogram = vec![0; max + 1];
    for v in 0..g.n() {
        histogram[g.degree(v)] += 1;
    }
    DegreeStats {
        average: 2.0 * g.edge_count() as f64 / g.n() as f64,
        max,
        min,
        histogram,
    }
}

//! Decision orderings: the constructive orderings (aggregator, butterfly
//! bottom-up, grid log-log aggregation, preferential-attachment arrival) and
//! the simulation heuristics (random, spiral, Two Neighbors, Two Neighbors +
//! High Value).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_order, greedy_independent_neighbors, greedy_independent_subset, Graph};

/// A permutation of `0..n` giving the order in which vertices decide.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Ordering {
    sequence: Vec<usize>,
    #[serde(skip)]
    position: Vec<usize>,
}

impl Ordering {
    pub fn from_sequence(sequence: Vec<usize>) -> Result<Self> {
        let n = sequence.len();
        let mut position = vec![usize::MAX; n];
        for (rank, &v) in sequence.iter().enumerate() {
            if v >= n {
                return Err(Error::param("ordering", format!("vertex {v} out of range for n = {n}")));
            }
            if position[v] != usize::MAX {
                return Err(Error::param("ordering", format!("vertex {v} appears twice")));
            }
            position[v] = rank;
        }
        Ok(Ordering { sequence, position })
    }

    pub fn identity(n: usize) -> Self {
        Ordering {
            sequence: (0..n).collect(),
            position: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    /// Vertex deciding at `rank`.
    pub fn vertex(&self, rank: usize) -> usize {
        self.sequence[rank]
    }

    /// Rank at which `v` decides.
    pub fn rank(&self, v: usize) -> usize {
        self.position[v]
    }

    /// Ranks of the neighbors of the rank-`r` vertex that decide before it,
    /// ascending.
    pub fn earlier_neighbor_ranks(&self, g: &Graph, rank: usize) -> Vec<usize> {
        let v = self.sequence[rank];
        let mut ranks: Vec<usize> = g
            .neighbors(v)
            .iter()
            .map(|&u| self.position[u])
            .filter(|&r| r < rank)
            .collect();
        ranks.sort_unstable();
        ranks
    }

    /// Single line of space-separated vertex indices.
    pub fn to_line(&self) -> String {
        let parts: Vec<String> = self.sequence.iter().map(|v| v.to_string()).collect();
        parts.join(" ")
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let sequence = line
            .split_whitespace()
            .enumerate()
            .map(|(i, tok)| {
                tok.parse::<usize>().map_err(|e| Error::Parse {
                    line: 1,
                    reason: format!("token {i} `{tok}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sequence(sequence)
    }
}

/// Witness for the aggregator construction: the aggregator `v`, its
/// independent guinea-pig neighbors `S`, and the size of `v`'s component in
/// `G - S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderingCertificate {
    pub aggregator: usize,
    pub guinea_pigs: Vec<usize>,
    pub coverage: usize,
}

/// An ordering together with the vertices that were placed by a seeding,
/// restart or fallback phase rather than by the frontier rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TracedOrdering {
    pub ordering: Ordering,
    pub seeded: Vec<bool>,
    /// High-value labels at the end of construction (High Value ordering only).
    pub high_value: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogLogOrdering {
    pub ordering: Ordering,
    /// Number of leading vertices that belong to the aggregation sequences.
    pub step_one_len: usize,
    /// Last aggregation vertex, where the traversal starts.
    pub aggregator: Option<usize>,
    /// The grid was too small for any aggregation tuple; the spiral
    /// ordering was returned instead.
    pub fell_back: bool,
}

pub fn random_ordering<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Ordering {
    let mut seq: Vec<usize> = (0..g.n()).collect();
    seq.shuffle(rng);
    Ordering::from_sequence(seq).expect("shuffle is a permutation")
}

pub fn arrival_ordering(g: &Graph) -> Result<Ordering> {
    let seq = g.arrival_order().ok_or(Error::WrongFamily {
        expected: "preferential-attachment",
    })?;
    Ordering::from_sequence(seq)
}

/// Rank 0 first, then rank 1, ...; ascending position within a rank.
pub fn bottom_up_ordering(g: &Graph) -> Result<Ordering> {
    g.butterfly_k().ok_or(Error::WrongFamily { expected: "butterfly" })?;
    Ok(Ordering::identity(g.n()))
}

/// Clockwise peel from the top-left corner of each layer, outermost first.
pub fn spiral_ordering(g: &Graph) -> Result<Ordering> {
    let side = g.grid_side().ok_or(Error::WrongFamily { expected: "grid" })?;
    Ordering::from_sequence(spiral_sequence(side))
}

fn spiral_sequence(side: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(side * side);
    let at = |row: usize, col: usize| row * side + col;
    let (mut top, mut left) = (0usize, 0usize);
    let (mut bottom, mut right) = (side as isize - 1, side as isize - 1);
    while top as isize <= bottom && left as isize <= right {
        let (b, r) = (bottom as usize, right as usize);
        out.extend((left..=r).map(|c| at(top, c)));
        out.extend((top + 1..=b).map(|row| at(row, r)));
        if top < b {
            out.extend((left..r).rev().map(|c| at(b, c)));
        }
        if left < r {
            out.extend((top + 1..b).rev().map(|row| at(row, left)));
        }
        top += 1;
        left += 1;
        bottom -= 1;
        right -= 1;
    }
    out
}

/// Aggregation sequences for the log-log grid construction, as 1-based
/// `(x, y)` lattice points, in emission order. Empty when `floor(log2 n) < 4`.
pub fn loglog_sequences(n: usize) -> Vec<Vec<(usize, usize)>> {
    let log_n = floor_log2(n);
    let mut sequences = Vec::new();
    let mut a = 1usize;
    // k = max{x >= 0 : 2^(x + 1 + a) <= log_n}
    while (1usize << (1 + a)) <= log_n {
        let mut k = 0usize;
        while (1usize << (k + 2 + a)) <= log_n {
            k += 1;
        }
        let half = 1usize << (a - 1);
        for h in 1..=(1usize << k) {
            let m = (2 * h - 1) << a;
            let mut seq = Vec::with_capacity(2 * half + 1);
            seq.extend((m - half..m).map(|x| (x, a)));
            seq.extend((m + 1..=m + half).rev().map(|x| (x, a)));
            seq.push((m, a));
            sequences.push(seq);
        }
        a += 1;
    }
    sequences
}

fn floor_log2(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

/// Log-log aggregation ordering on a square grid: the aggregation sequences
/// for increasing `a`, then a breadth-first traversal of the grid minus the
/// other aggregation vertices starting from the last one, then leftovers.
pub fn grid_loglog_ordering(g: &Graph) -> Result<LogLogOrdering> {
    let side = g.grid_side().ok_or(Error::WrongFamily { expected: "grid" })?;
    let n = g.n();
    let sequences = loglog_sequences(n);
    let fits = sequences.iter().flatten().all(|&(x, y)| x <= side && y <= side);
    if sequences.is_empty() || !fits {
        return Ok(LogLogOrdering {
            ordering: spiral_ordering(g)?,
            step_one_len: 0,
            aggregator: None,
            fell_back: true,
        });
    }

    let mut seq: Vec<usize> = sequences
        .iter()
        .flatten()
        .map(|&(x, y)| (y - 1) * side + (x - 1))
        .collect();
    let step_one_len = seq.len();
    let alpha = *seq.last().expect("non-empty");

    let mut placed = vec![false; n];
    for &v in &seq {
        placed[v] = true;
    }
    for v in bfs_order(g, alpha, &placed).into_iter().skip(1) {
        placed[v] = true;
        seq.push(v);
    }
    seq.extend((0..n).filter(|&v| !placed[v]));

    Ok(LogLogOrdering {
        ordering: Ordering::from_sequence(seq)?,
        step_one_len,
        aggregator: Some(alpha),
        fell_back: false,
    })
}

/// Default guinea-pig count for the aggregator ordering: `ceil(sqrt(deg))`.
pub fn default_guinea_pigs(degree: usize) -> usize {
    (degree as f64).sqrt().ceil() as usize
}

/// Guinea pigs `S` first, then the aggregator `v`, then a breadth-first
/// traversal of `G - S` from `v`, then any unreached vertices ascending.
/// `v` is a maximum-degree vertex (lowest index on ties).
pub fn aggregator_ordering(g: &Graph, m_target: Option<usize>) -> (Ordering, OrderingCertificate) {
    let n = g.n();
    let v = (0..n)
        .max_by_key(|&u| (g.degree(u), std::cmp::Reverse(u)))
        .expect("graph has at least one vertex");
    let m = m_target.unwrap_or_else(|| default_guinea_pigs(g.degree(v)));
    let guinea_pigs = greedy_independent_neighbors(g, v, m);

    let mut placed = vec![false; n];
    let mut seq = Vec::with_capacity(n);
    for &u in &guinea_pigs {
        placed[u] = true;
        seq.push(u);
    }
    let reach = bfs_order(g, v, &placed);
    let coverage = reach.len();
    for u in reach {
        placed[u] = true;
        seq.push(u);
    }
    seq.extend((0..n).filter(|&u| !placed[u]));

    let ordering = Ordering::from_sequence(seq).expect("every vertex placed once");
    (
        ordering,
        OrderingCertificate {
            aggregator: v,
            guinea_pigs,
            coverage,
        },
    )
}

/// Incremental placement state shared by the frontier heuristics.
struct Placement<'g> {
    g: &'g Graph,
    sequence: Vec<usize>,
    placed: Vec<bool>,
    placed_neighbors: Vec<u32>,
    seeded: Vec<bool>,
    // Unplaced vertices with O(1) removal, for uniform seed draws.
    pool: Vec<usize>,
    pool_pos: Vec<usize>,
}

impl<'g> Placement<'g> {
    fn new(g: &'g Graph) -> Self {
        let n = g.n();
        Placement {
            g,
            sequence: Vec::with_capacity(n),
            placed: vec![false; n],
            placed_neighbors: vec![0; n],
            seeded: vec![false; n],
            pool: (0..n).collect(),
            pool_pos: (0..n).collect(),
        }
    }

    fn done(&self) -> bool {
        self.sequence.len() == self.placed.len()
    }

    fn place(&mut self, v: usize, seeded: bool) {
        debug_assert!(!self.placed[v]);
        self.placed[v] = true;
        self.seeded[v] = seeded;
        self.sequence.push(v);
        for &u in self.g.neighbors(v) {
            self.placed_neighbors[u] += 1;
        }
        let i = self.pool_pos[v];
        let last = *self.pool.last().expect("pool holds v");
        self.pool.swap_remove(i);
        if last != v {
            self.pool_pos[last] = i;
        }
    }

    fn random_unplaced<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pool[rng.gen_range(0..self.pool.len())]
    }

    fn finish(self, high_value: Vec<bool>) -> TracedOrdering {
        TracedOrdering {
            ordering: Ordering::from_sequence(self.sequence).expect("every vertex placed once"),
            seeded: self.seeded,
            high_value,
        }
    }
}

/// Two Neighbors heuristic with a uniformly drawn first seed.
pub fn two_neighbors_ordering<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> TracedOrdering {
    let seed = rng.gen_range(0..g.n());
    two_neighbors_from(g, seed, rng)
}

/// Two Neighbors heuristic starting from `seed`: the seed's neighbors
/// (ascending), then the seed, then every vertex with at least two placed
/// neighbors in FIFO order. When the frontier runs dry a new seed is drawn
/// uniformly among the undecided vertices.
pub fn two_neighbors_from<R: Rng + ?Sized>(g: &Graph, seed: usize, rng: &mut R) -> TracedOrdering {
    let mut state = Placement::new(g);
    let mut queued = vec![false; g.n()];
    let mut frontier = VecDeque::new();
    let mut next_seed = Some(seed);

    let mut place = |state: &mut Placement, v: usize, seeded: bool, frontier: &mut VecDeque<usize>| {
        state.place(v, seeded);
        for &u in g.neighbors(v) {
            if !state.placed[u] && !queued[u] && state.placed_neighbors[u] >= 2 {
                queued[u] = true;
                frontier.push_back(u);
            }
        }
    };

    while !state.done() {
        let s = next_seed.take().unwrap_or_else(|| state.random_unplaced(rng));
        for &u in g.neighbors(s) {
            if !state.placed[u] {
                place(&mut state, u, true, &mut frontier);
            }
        }
        if !state.placed[s] {
            place(&mut state, s, true, &mut frontier);
        }
        while let Some(u) = frontier.pop_front() {
            if !state.placed[u] {
                place(&mut state, u, false, &mut frontier);
            }
        }
    }
    let n = g.n();
    state.finish(vec![false; n])
}

/// The two highest-degree vertices, lowest index first on ties.
pub fn top_two_hubs(g: &Graph) -> Vec<usize> {
    let mut by_degree: Vec<usize> = (0..g.n()).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    by_degree.truncate(2);
    by_degree
}

/// Two Neighbors + High Value heuristic.
///
/// Each of the two hubs places a greedy independent set of at most
/// `min(m, deg - 1)` of its undecided neighbors and then itself, and is
/// labelled high-value. Then, round by round, every undecided vertex with at
/// least two placed neighbors, at least half of them high-value, is placed
/// and labelled high-value. (A strict majority stalls as soon as a hub
/// neighbor also touches one of the hub's guinea pigs.) Whatever remains follows in uniform
/// random order.
pub fn two_neighbors_high_value_ordering<R: Rng + ?Sized>(g: &Graph, m: usize, rng: &mut R) -> Result<TracedOrdering> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let n = g.n();
    let mut state = Placement::new(g);
    let mut high_value = vec![false; n];
    let mut high_neighbors = vec![0u32; n];
    let hubs = top_two_hubs(g);

    let mark_high = |v: usize, high_value: &mut [bool], high_neighbors: &mut [u32]| {
        high_value[v] = true;
        for &u in g.neighbors(v) {
            high_neighbors[u] += 1;
        }
    };

    for &hub in &hubs {
        if state.placed[hub] {
            continue;
        }
        let cap = m.min(g.degree(hub).saturating_sub(1));
        let candidates = g
            .neighbors(hub)
            .iter()
            .copied()
            .filter(|&u| !state.placed[u] && !hubs.contains(&u));
        for u in greedy_independent_subset(g, candidates, cap) {
            state.place(u, true);
        }
        state.place(hub, true);
        mark_high(hub, &mut high_value, &mut high_neighbors);
    }

    let eligible = |state: &Placement, high_neighbors: &[u32], v: usize| {
        let placed = state.placed_neighbors[v];
        !state.placed[v] && placed >= 2 && 2 * high_neighbors[v] >= placed
    };

    let mut touched: Vec<usize> = state
        .sequence
        .iter()
        .flat_map(|&v| g.neighbors(v).iter().copied())
        .collect();
    loop {
        touched.sort_unstable();
        touched.dedup();
        let round: Vec<usize> = touched
            .iter()
            .copied()
            .filter(|&v| eligible(&state, &high_neighbors, v))
            .collect();
        if round.is_empty() {
            break;
        }
        touched.clear();
        for &v in &round {
            state.place(v, false);
            mark_high(v, &mut high_value, &mut high_neighbors);
            touched.extend(g.neighbors(v).iter().copied());
        }
    }

    let mut rest: Vec<usize> = (0..n).filter(|&v| !state.placed[v]).collect();
    rest.shuffle(rng);
    for v in rest {
        state.place(v, true);
    }
    Ok(state.finish(high_value))
}

/// Named ordering construction used by the simulator and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    Random,
    Arrival,
    BottomUp,
    Spiral,
    GridLoglog,
    TwoNeighbors,
    HighValue { m: usize },
    Aggregator { m_target: Option<usize> },
    /// A precomputed ordering, replayed as-is.
    Fixed { sequence: Vec<usize> },
}

impl Strategy {
    pub fn build<R: Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<Ordering> {
        match self {
            Strategy::Random => Ok(random_ordering(g, rng)),
            Strategy::Arrival => arrival_ordering(g),
            Strategy::BottomUp => bottom_up_ordering(g),
            Strategy::Spiral => spiral_ordering(g),
            Strategy::GridLoglog => Ok(grid_loglog_ordering(g)?.ordering),
            Strategy::TwoNeighbors => Ok(two_neighbors_ordering(g, rng).ordering),
            Strategy::HighValue { m } => Ok(two_neighbors_high_value_ordering(g, *m, rng)?.ordering),
            Strategy::Aggregator { m_target } => Ok(aggregator_ordering(g, *m_target).0),
            Strategy::Fixed { sequence } => {
                if sequence.len() != g.n() {
                    return Err(Error::param("ordering", "fixed ordering length differs from n"));
                }
                Ordering::from_sequence(sequence.clone())
            }
        }
    }

    /// Whether two builds on the same graph can differ.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Strategy::Random | Strategy::TwoNeighbors | Strategy::HighValue { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Arrival => "arrival",
            Strategy::BottomUp => "bottom-up",
            Strategy::Spiral => "spiral",
            Strategy::GridLoglog => "grid-loglog",
            Strategy::TwoNeighbors => "two-neighbors",
            Strategy::HighValue { .. } => "high-value",
            Strategy::Aggregator { .. } => "aggregator",
            Strategy::Fixed { .. } => "fixed",
        }
    }

    /// Parameters as `k=v` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self {
            Strategy::HighValue { m } => format!("m={m}"),
            Strategy::Aggregator { m_target: Some(m) } => format!("m={m}"),
            _ => String::new(),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Parses a strategy name; parameterized strategies get their defaults
    /// (`high-value` uses `m = 30`).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Strategy::Random,
            "arrival" => Strategy::Arrival,
            "bottom-up" => Strategy::BottomUp,
            "spiral" => Strategy::Spiral,
            "grid-loglog" => Strategy::GridLoglog,
            "two-neighbors" => Strategy::TwoNeighbors,
            "high-value" => Strategy::HighValue { m: 30 },
            "aggregator" => Strategy::Aggregator { m_target: None },
            other => return Err(Error::config("ordering", format!("unknown ordering `{other}`"))),
        })
    }
}

//! Sampling of `B(n, m, p)` and the induced intersection graph.
//!
//! Edges are drawn by geometric skipping over the row-major enumeration of the
//! `n x m` slot grid, so the cost is proportional to the number of edges rather
//! than to `nm`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::regimes::RegimeConfig;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// A vertex of the bipartite graph: an individual `V(i)` or a community `U(j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    V(u32),
    U(u32),
}

/// Sparse bipartite graph with sorted adjacency on both sides.
///
/// Only communities with at least one member are materialized on the U side
/// (their "slots"); with `m` in the hundreds of millions almost all
/// communities are empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    n: usize,
    m: usize,
    seed: u64,
    v_offsets: Vec<usize>,
    v_adj: Vec<u32>,
    v_adj_slot: Vec<u32>,
    u_labels: Vec<u32>,
    u_offsets: Vec<usize>,
    u_adj: Vec<u32>,
}

impl BipartiteGraph {
    /// Builds a graph from an arbitrary edge list `(v, u)`; duplicates are merged.
    pub fn from_edges(n: usize, m: usize, edges: &[(u32, u32)]) -> Result<Self> {
        check_sides(n, m)?;
        let mut sorted = edges.to_vec();
        for &(v, u) in &sorted {
            if v as usize >= n {
                return Err(Error::LabelOutOfRange { label: v as usize, size: n });
            }
            if u as usize >= m {
                return Err(Error::LabelOutOfRange { label: u as usize, size: m });
            }
        }
        sorted.sort_unstable();
        sorted.dedup();
        Ok(Self::from_sorted_unique(n, m, 0, sorted))
    }

    /// `edges` must be sorted by `(v, u)` without duplicates.
    fn from_sorted_unique(n: usize, m: usize, seed: u64, edges: Vec<(u32, u32)>) -> Self {
        let e = edges.len();
        assert!(e <= u32::MAX as usize, "edge count exceeds u32 positions");
        let mut v_offsets = vec![0usize; n + 1];
        for &(v, _) in &edges {
            v_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            v_offsets[i + 1] += v_offsets[i];
        }
        let v_adj: Vec<u32> = edges.iter().map(|&(_, u)| u).collect();

        let mut keys: Vec<u64> = edges
            .iter()
            .enumerate()
            .map(|(pos, &(_, u))| ((u as u64) << 32) | pos as u64)
            .collect();
        keys.sort_unstable();

        let mut v_adj_slot = vec![0u32; e];
        let mut u_labels = Vec::new();
        let mut u_offsets = vec![0usize];
        let mut u_adj = Vec::with_capacity(e);
        for key in keys {
            let u = (key >> 32) as u32;
            let pos = (key & 0xffff_ffff) as usize;
            if u_labels.last() != Some(&u) {
                if !u_labels.is_empty() {
                    u_offsets.push(u_adj.len());
                }
                u_labels.push(u);
            }
            v_adj_slot[pos] = (u_labels.len() - 1) as u32;
            u_adj.push(edges[pos].0);
        }
        u_offsets.push(u_adj.len());
        if u_labels.is_empty() {
            u_offsets = vec![0];
        }

        BipartiteGraph { n, m, seed, v_offsets, v_adj, v_adj_slot, u_labels, u_offsets, u_adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Seed the graph was sampled with (0 for hand-built graphs).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edge_count(&self) -> usize {
        self.v_adj.len()
    }

    /// Sorted community labels of individual `v`.
    pub fn v_neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.v_adj[self.v_offsets[v]..self.v_offsets[v + 1]]
    }

    /// Slots of the communities of `v`, aligned with [`Self::v_neighbors`].
    pub fn v_neighbor_slots(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.v_adj_slot[self.v_offsets[v]..self.v_offsets[v + 1]]
    }

    /// Sorted members of community `u` (empty for isolated communities).
    pub fn u_neighbors(&self, u: u32) -> &[u32] {
        match self.u_slot(u) {
            Some(slot) => self.slot_members(slot),
            None => &[],
        }
    }

    /// Number of communities with at least one member.
    pub fn nonempty_communities(&self) -> usize {
        self.u_labels.len()
    }

    pub fn u_slot(&self, u: u32) -> Option<u32> {
        self.u_labels.binary_search(&u).ok().map(|s| s as u32)
    }

    pub fn slot_label(&self, slot: u32) -> u32 {
        self.u_labels[slot as usize]
    }

    pub fn slot_members(&self, slot: u32) -> &[u32] {
        let s = slot as usize;
        &self.u_adj[self.u_offsets[s]..self.u_offsets[s + 1]]
    }

    pub fn has_edge(&self, v: u32, u: u32) -> bool {
        (v as usize) < self.n && self.v_neighbors(v).binary_search(&u).is_ok()
    }

    /// All edges `(v, u)` sorted by `v` then `u`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n as u32).flat_map(move |v| self.v_neighbors(v).iter().map(move |&u| (v, u)))
    }

    /// The same graph with the roles of the two sides exchanged: `B(m, n, p)`.
    pub fn transposed(&self) -> BipartiteGraph {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (slot, &u) in self.u_labels.iter().enumerate() {
            for &v in self.slot_members(slot as u32) {
                edges.push((u, v));
            }
        }
        Self::from_sorted_unique(self.m, self.n, self.seed, edges)
    }

    /// Exact graph distance between two vertices, `None` when disconnected.
    pub fn bfs_distance(&self, a: Vertex, b: Vertex) -> Result<Option<usize>> {
        self.check_vertex(b)?;
        Ok(self.distances_from(a)?.get(b))
    }

    /// Breadth-first distances from `source` to every vertex.
    pub fn distances_from(&self, source: Vertex) -> Result<BipartiteDistances> {
        self.check_vertex(source)?;
        let mut dist_v = vec![u32::MAX; self.n];
        let mut dist_u = vec![u32::MAX; self.u_labels.len()];
        let mut queue = VecDeque::new();
        match source {
            Vertex::V(v) => {
                dist_v[v as usize] = 0;
                queue.push_back(Vertex::V(v));
            }
            Vertex::U(u) => {
                // Isolated communities never appear in the slot table.
                if let Some(slot) = self.u_slot(u) {
                    dist_u[slot as usize] = 0;
                    queue.push_back(Vertex::U(slot));
                }
            }
        }
        while let Some(x) = queue.pop_front() {
            match x {
                Vertex::V(v) => {
                    let d = dist_v[v as usize] + 1;
                    for &slot in self.v_neighbor_slots(v) {
                        if dist_u[slot as usize] == u32::MAX {
                            dist_u[slot as usize] = d;
                            queue.push_back(Vertex::U(slot));
                        }
                    }
                }
                Vertex::U(slot) => {
                    let d = dist_u[slot as usize] + 1;
                    for &w in self.slot_members(slot) {
                        if dist_v[w as usize] == u32::MAX {
                            dist_v[w as usize] = d;
                            queue.push_back(Vertex::V(w));
                        }
                    }
                }
            }
        }
        Ok(BipartiteDistances { source, graph_u_labels: self.u_labels.clone(), dist_v, dist_u })
    }

    fn check_vertex(&self, x: Vertex) -> Result<()> {
        match x {
            Vertex::V(v) if v as usize >= self.n => {
                Err(Error::LabelOutOfRange { label: v as usize, size: self.n })
            }
            Vertex::U(u) if u as usize >= self.m => {
                Err(Error::LabelOutOfRange { label: u as usize, size: self.m })
            }
            _ => Ok(()),
        }
    }

    /// Text dump: header `n m seed`, then one sorted `v u` pair per line.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.n, self.m, self.seed)?;
        for (v, u) in self.edges() {
            writeln!(out, "{v} {u}")?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dump".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad header {header:?}")));
        }
        let parse = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let n = parse(fields[0])? as usize;
        let m = parse(fields[1])? as usize;
        let seed = parse(fields[2])?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(v), Some(u), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("bad edge line {line:?}")));
            };
            edges.push((parse(v)? as u32, parse(u)? as u32));
        }
        let mut graph = Self::from_edges(n, m, &edges)?;
        graph.seed = seed;
        Ok(graph)
    }
}

fn check_sides(n: usize, m: usize) -> Result<()> {
    if n > u32::MAX as usize || m > u32::MAX as usize {
        return Err(Error::InvalidConfig(format!("sides too large: n = {n}, m = {m}")));
    }
    Ok(())
}

/// Distances produced by [`BipartiteGraph::distances_from`].
#[derive(Clone, Debug)]
pub struct BipartiteDistances {
    pub source: Vertex,
    graph_u_labels: Vec<u32>,
    dist_v: Vec<u32>,
    dist_u: Vec<u32>,
}

impl BipartiteDistances {
    pub fn get(&self, x: Vertex) -> Option<usize> {
        let d = match x {
            Vertex::V(v) => self.dist_v.get(v as usize).copied().unwrap_or(u32::MAX),
            Vertex::U(u) => match self.graph_u_labels.binary_search(&u) {
                Ok(slot) => self.dist_u[slot],
                // an isolated community is only at distance 0 from itself
                Err(_) => return (self.source == x).then_some(0),
            },
        };
        (d != u32::MAX).then_some(d as usize)
    }
}

/// Samples `B(n, m, p)` for the given configuration.
pub fn sample_bipartite(config: &RegimeConfig, seed: u64) -> BipartiteGraph {
    sample_bipartite_raw(config.n, config.m, config.p, seed)
}

/// Samples `B(n, m, p)`: every one of the `nm` slots independently with probability `p`.
pub fn sample_bipartite_raw(n: usize, m: usize, p: f64, seed: u64) -> BipartiteGraph {
    assert!(n <= u32::MAX as usize && m <= u32::MAX as usize, "sides must fit in u32");
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let total = n as u64 * m as u64;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    if p >= 1.0 {
        edges.reserve(total as usize);
        for v in 0..n as u32 {
            for u in 0..m as u32 {
                edges.push((v, u));
            }
        }
    } else if p > 0.0 && total > 0 {
        let mean = total as f64 * p;
        edges.reserve((mean + 6.0 * mean.sqrt() + 16.0) as usize);
        let mut rng = rng_from_seed(seed);
        let log_q = (-p).ln_1p();
        let m64 = m as u64;
        let mut slot: u64 = 0;
        loop {
            let x: f64 = rng.random();
            let skip = ((1.0 - x).ln() / log_q).floor();
            if skip >= (total - slot) as f64 {
                break;
            }
            slot += skip as u64;
            if slot >= total {
                break;
            }
            edges.push(((slot / m64) as u32, (slot % m64) as u32));
            slot += 1;
            if slot >= total {
                break;
            }
        }
    }
    BipartiteGraph::from_sorted_unique(n, m, seed, edges)
}

/// Simple graph on the individuals: `i ~ j` iff they share a community.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionGraph {
    n: usize,
    offsets: Vec<usize>,
    adj: Vec<u32>,
    witness: Vec<u32>,
}

impl IntersectionGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn neighbors(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.adj[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: u32) -> usize {
        self.neighbors(i).len()
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        (i as usize) < self.n && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Smallest community label shared by `i` and `j`.
    pub fn witness(&self, i: u32, j: u32) -> Option<u32> {
        if i as usize >= self.n {
            return None;
        }
        let base = self.offsets[i as usize];
        self.neighbors(i).binary_search(&j).ok().map(|k| self.witness[base + k])
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n as u32).flat_map(move |i| {
            self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j))
        })
    }

    pub fn bfs_distance(&self, i: u32, j: u32) -> Result<Option<usize>> {
        if j as usize >= self.n {
            return Err(Error::LabelOutOfRange { label: j as usize, size: self.n });
        }
        let d = self.distances_from(i)?[j as usize];
        Ok((d != u32::MAX).then_some(d as usize))
    }

    /// Breadth-first distances from `source`; `u32::MAX` marks unreachable vertices.
    pub fn distances_from(&self, source: u32) -> Result<Vec<u32>> {
        if source as usize >= self.n {
            return Err(Error::LabelOutOfRange { label: source as usize, size: self.n });
        }
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[source as usize] = 0;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let d = dist[x as usize] + 1;
            for &y in self.neighbors(x) {
                if dist[y as usize] == u32::MAX {
                    dist[y as usize] = d;
                    queue.push_back(y);
                }
            }
        }
        Ok(dist)
    }
}

/// Induces `G(n, m, p)` from its bipartite parent: each community becomes a clique.
pub fn induce_intersection(graph: &BipartiteGraph) -> IntersectionGraph {
    let n = graph.n();
    let mut pairs: Vec<(u64, u32)> = Vec::new();
    for slot in 0..graph.nonempty_communities() as u32 {
        let members = graph.slot_members(slot);
        let label = graph.slot_label(slot);
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                pairs.push((((i as u64) << 32) | j as u64, label));
                pairs.push((((j as u64) << 32) | i as u64, label));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup_by_key(|&mut (key, _)| key);

    let mut offsets = vec![0usize; n + 1];
    for &(key, _) in &pairs {
        offsets[(key >> 32) as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let adj = pairs.iter().map(|&(key, _)| (key & 0xffff_ffff) as u32).collect();
    let witness = pairs.iter().map(|&(_, w)| w).collect();
    IntersectionGraph { n, offsets, adj, witness }
}

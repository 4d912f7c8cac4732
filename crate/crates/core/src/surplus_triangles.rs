//! Surplus edges of the exploration forest, their point measure, triangle
//! counts and clustering estimates.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exploration::{components, ExplorationTrace};
use crate::regimes::RegimeConfig;
use crate::rng::derive_seed;
use crate::sampler::{induce_intersection, sample_bipartite, BipartiteGraph, IntersectionGraph};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurplusCase {
    /// `u` is new at step `k` and `w` is already active.
    ActiveHit,
    /// `w` was discovered through an earlier community of the same step.
    SiblingOverlap,
}

/// A non-forest edge `{u, w}` with its step `k(e)` and rank `l(e)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurplusRecord {
    pub u: u32,
    pub w: u32,
    pub k: usize,
    pub case: SurplusCase,
    /// 1-based rank of `w` in `A_{k-1}`; 0 for sibling overlaps.
    pub l: u32,
}

/// Classifies every non-forest edge incident to a community claimed within
/// the trace. For a complete trace this covers all edges of `graph`.
pub fn classify_surplus(graph: &BipartiteGraph, trace: &ExplorationTrace) -> Result<Vec<SurplusRecord>> {
    if graph.n() != trace.n || graph.m() != trace.m || graph.nonempty_communities() != trace.comm_step.len() {
        return Err(Error::TraceMismatch("graph dimensions differ from the trace".into()));
    }
    let mut records = Vec::new();
    let mut forest = 0usize;
    for k in 1..=trace.len() {
        let vk = trace.v(k);
        for (i, &u) in trace.communities(k).iter().enumerate() {
            let slot = graph
                .u_slot(u)
                .ok_or_else(|| Error::TraceMismatch(format!("community {u} has no members")))?;
            for &w in graph.slot_members(slot) {
                let wi = w as usize;
                if w == vk || (trace.disc_step[wi] as usize == k && trace.disc_block[wi] as usize == i) {
                    forest += 1;
                } else if trace.disc_step[wi] as usize == k {
                    records.push(SurplusRecord { u, w, k, case: SurplusCase::SiblingOverlap, l: 0 });
                } else if let Some(l) = trace.active_rank(k, w) {
                    records.push(SurplusRecord { u, w, k, case: SurplusCase::ActiveHit, l });
                } else {
                    return Err(Error::TraceMismatch(format!(
                        "edge ({w}, {u}) at step {k} is neither forest, active nor sibling"
                    )));
                }
            }
        }
    }
    if forest != trace.forest_edges.len() {
        return Err(Error::TraceMismatch(format!(
            "found {forest} forest edges but trace holds {}",
            trace.forest_edges.len()
        )));
    }
    if trace.is_complete() && forest + records.len() != graph.edge_count() {
        return Err(Error::TraceMismatch("edge accounting does not close".into()));
    }
    Ok(records)
}

/// Rescaled surplus atoms `(k n^{-2/3}, l n^{-1/3})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurplusMeasure {
    pub atoms: Vec<(f64, f64)>,
    /// Whether coincident atoms have been merged.
    pub simple: bool,
}

impl SurplusMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms in the closed box `[0, x_max] x [0, y_max]`.
    pub fn count_in_box(&self, x_max: f64, y_max: f64) -> usize {
        self.atoms.iter().filter(|&&(x, y)| x <= x_max && y <= y_max).count()
    }
}

/// The raw measure, one atom per record.
pub fn point_measure(records: &[SurplusRecord], n: usize) -> SurplusMeasure {
    let (tx, ty) = measure_scales(n);
    SurplusMeasure { atoms: records.iter().map(|r| (r.k as f64 * tx, r.l as f64 * ty)).collect(), simple: false }
}

/// The simple measure with the same support as [`point_measure`].
pub fn simple_point_measure(records: &[SurplusRecord], n: usize) -> SurplusMeasure {
    let (tx, ty) = measure_scales(n);
    let mut keys: Vec<(usize, u32)> = records.iter().map(|r| (r.k, r.l)).collect();
    keys.sort_unstable();
    keys.dedup();
    SurplusMeasure { atoms: keys.into_iter().map(|(k, l)| (k as f64 * tx, l as f64 * ty)).collect(), simple: true }
}

fn measure_scales(n: usize) -> (f64, f64) {
    let n = n as f64;
    (n.powf(-2.0 / 3.0), n.powf(-1.0 / 3.0))
}

/// `T_k = sum_{j <= k} sum_i (1 + #N_{j,i}) choose 3`, with `T_0 = 0`.
pub fn triangle_process(trace: &ExplorationTrace) -> Vec<u64> {
    let mut t = Vec::with_capacity(trace.len() + 1);
    t.push(0u64);
    for k in 1..=trace.len() {
        let dt: u64 = trace.block_sizes(k).iter().map(|&d| choose3(d as u64 + 1)).sum();
        t.push(t[k - 1] + dt);
    }
    t
}

/// Role-swapped count for a transposed exploration, where the explored
/// vertices are the communities: `T_k = sum_{j <= k} X_j choose 3`.
pub fn swapped_triangle_process(trace: &ExplorationTrace) -> Vec<u64> {
    let mut t = Vec::with_capacity(trace.len() + 1);
    t.push(0u64);
    for k in 1..=trace.len() {
        t.push(t[k - 1] + choose3(trace.x[k] as u64));
    }
    t
}

pub fn choose3(x: u64) -> u64 {
    if x < 3 {
        0
    } else {
        x * (x - 1) * (x - 2) / 6
    }
}

/// Triangles of `graph` with all three corners in `comp`, which must be a
/// union of connected components.
pub fn count_triangles_exact(graph: &IntersectionGraph, comp: &[u32]) -> u64 {
    comp.iter().map(|&i| triangles_at_lowest(graph, i)).sum()
}

/// Total number of triangles of `graph`.
pub fn count_triangles_total(graph: &IntersectionGraph) -> u64 {
    (0..graph.n() as u32).map(|i| triangles_at_lowest(graph, i)).sum()
}

/// Triangles whose smallest vertex is `i`.
fn triangles_at_lowest(graph: &IntersectionGraph, i: u32) -> u64 {
    let ni = graph.neighbors(i);
    let mut count = 0u64;
    for &j in ni.iter().filter(|&&j| j > i) {
        count += sorted_intersection_above(ni, graph.neighbors(j), j);
    }
    count
}

/// `#{x in a ∩ b : x > floor}` for sorted slices.
fn sorted_intersection_above(a: &[u32], b: &[u32], floor: u32) -> u64 {
    let mut ia = a.partition_point(|&x| x <= floor);
    let mut ib = b.partition_point(|&x| x <= floor);
    let mut count = 0;
    while ia < a.len() && ib < b.len() {
        match a[ia].cmp(&b[ib]) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                ia += 1;
                ib += 1;
            }
        }
    }
    count
}

/// Monte Carlo estimate of `P(2 ~ 3 | 1 ~ 2, 1 ~ 3)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringEstimate {
    /// `None` when no conditioning event was observed.
    pub estimate: Option<f64>,
    pub stderr: f64,
    /// Number of conditioning events (two-paths) observed.
    pub events: u64,
    pub replicates: usize,
}

/// Estimates the clustering coefficient from `replicates` fresh graphs.
///
/// Every ordered triple of distinct individuals is a conditioning trial, so
/// each graph contributes all of its two-paths `(j, i, k)` rather than a single
/// rejection-sampled triple; by exchangeability the ratio of closed two-paths
/// to two-paths estimates the same conditional probability. The standard error
/// is the delta-method error of a ratio of replicate totals.
pub fn clustering_coefficient_mc(config: &RegimeConfig, replicates: usize, seed: u64) -> ClusteringEstimate {
    let per: Vec<(f64, f64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let b = sample_bipartite(config, derive_seed(seed, r));
            let g = induce_intersection(&b);
            let wedges: u64 = (0..g.n() as u32).map(|i| (g.degree(i) as u64).saturating_sub(1) * g.degree(i) as u64 / 2).sum();
            (3.0 * count_triangles_total(&g) as f64, wedges as f64)
        })
        .collect();
    let closed: f64 = per.iter().map(|p| p.0).sum();
    let wedges: f64 = per.iter().map(|p| p.1).sum();
    let events = wedges as u64;
    if wedges == 0.0 {
        return ClusteringEstimate { estimate: None, stderr: f64::NAN, events, replicates };
    }
    let ratio = closed / wedges;
    let stderr = if replicates > 1 {
        let r = replicates as f64;
        let mean_w = wedges / r;
        let ss: f64 = per.iter().map(|&(a, b)| (a - ratio * b).powi(2)).sum();
        (ss / (r * (r - 1.0))).sqrt() / mean_w
    } else {
        f64::NAN
    };
    ClusteringEstimate { estimate: Some(ratio), stderr, events, replicates }
}

/// One row of the per-component summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentRow {
    pub rank: usize,
    pub v_size: usize,
    pub u_size: usize,
    pub surplus: usize,
    pub triangles: u64,
}

/// Ranked completed components with their surplus and triangle counts.
pub fn component_table(
    trace: &ExplorationTrace,
    records: &[SurplusRecord],
    graph: &IntersectionGraph,
) -> Vec<ComponentRow> {
    let mut surplus_by_step = vec![0usize; trace.len() + 1];
    for r in records {
        surplus_by_step[r.k] += 1;
    }
    components(trace)
        .iter()
        .enumerate()
        .map(|(i, c)| ComponentRow {
            rank: i + 1,
            v_size: c.v_size,
            u_size: c.u_size,
            surplus: c.steps().map(|k| surplus_by_step[k]).sum(),
            triangles: count_triangles_exact(graph, c.members(trace)),
        })
        .collect()
}

pub fn write_surplus_csv<W: Write>(records: &[SurplusRecord], mut out: W) -> Result<()> {
    writeln!(out, "k,l,case,u,w")?;
    for r in records {
        let case = match r.case {
            SurplusCase::ActiveHit => "active",
            SurplusCase::SiblingOverlap => "sibling",
        };
        writeln!(out, "{},{},{case},{},{}", r.k, r.l, r.u, r.w)?;
    }
    Ok(())
}

pub fn write_component_csv<W: Write>(rows: &[ComponentRow], mut out: W) -> Result<()> {
    writeln!(out, "rank,zeta,u_size,surplus,triangles")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.rank, r.v_size, r.u_size, r.surplus, r.triangles)?;
    }
    Ok(())
}

//! Depth-first exploration of `B(n, m, p)`.
//!
//! The active list is a stack whose top is the end of a `Vec`: at step `k` the
//! newly discovered individuals `N_k` are pushed in decreasing label order so
//! that the smallest ends up on top. A vertex never moves while it sits on the
//! stack, so its rank in `A_{k-1}` is `#A_{k-1} - position`.

use std::io::Write;

use rand::Rng;

use crate::rng::rng_from_seed;
use crate::sampler::{BipartiteGraph, Vertex};
use crate::{Error, Result};

/// How the root of a new component is chosen once the active list is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootRule {
    /// Uniform among unseen individuals, driven by its own seeded stream.
    UniformSeeded(u64),
    /// Smallest unseen label; deterministic.
    SmallestLabel,
}

/// Sentinel for "never" in per-vertex step arrays.
pub const NEVER: u32 = u32::MAX;

/// Complete record of one (possibly truncated) exploration.
///
/// Per-step vectors indexed by `k` have an unused entry at index 0 so that
/// `s[k]` is `S_k`; `order[k - 1]` is `v_k`.
#[derive(Clone, Debug)]
pub struct ExplorationTrace {
    pub n: usize,
    pub m: usize,
    /// Explored individuals `v_1, v_2, ...`.
    pub order: Vec<u32>,
    /// `X_k = #M_k`, index 0 unused.
    pub x: Vec<u32>,
    /// Communities of step `k` are `comm_labels[comm_offsets[k-1]..comm_offsets[k]]`.
    pub comm_offsets: Vec<usize>,
    /// `u_{k,i}` in increasing label order.
    pub comm_labels: Vec<u32>,
    /// `#N_{k,i}`, aligned with `comm_labels`.
    pub n_sizes: Vec<u32>,
    pub r: Vec<i64>,
    pub s: Vec<i64>,
    pub h: Vec<u32>,
    /// `(parent, child)` edges of the spanning forest.
    pub forest_edges: Vec<(Vertex, Vertex)>,
    /// `(k_-, k_+)` of every completed component in order of appearance.
    pub comp_bounds: Vec<(usize, usize)>,
    /// First step of the component still open when the horizon was hit.
    pub open_component: Option<usize>,
    /// Measured `#A_{k-1}` (stack length after removing `v_k`).
    pub active_before: Vec<u32>,
    /// Measured `#A_k = (#A*_k - 1)_+`.
    pub active_after: Vec<u32>,
    /// Measured `#V_{k-1}`.
    pub unseen_before: Vec<u32>,
    /// Measured `#U_{k-1}`.
    pub unclaimed_before: Vec<u64>,
    /// Step at which each individual joined some `N_k` (`NEVER` for roots and unseen).
    pub disc_step: Vec<u32>,
    /// Block index `i` (0-based) of the `N_{k,i}` containing each individual.
    pub disc_block: Vec<u32>,
    /// Step at which each individual was explored (`NEVER` if not reached).
    pub explored_step: Vec<u32>,
    /// Fixed stack position of each individual while it is active.
    pub stack_pos: Vec<u32>,
    /// Step at which each nonempty community (by slot) entered some `M_k`.
    pub comm_step: Vec<u32>,
    /// Index `i` (0-based) of that community within `M_k`.
    pub comm_block: Vec<u32>,
}

impl ExplorationTrace {
    /// Number of steps performed.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Whether all `n` individuals were explored.
    pub fn is_complete(&self) -> bool {
        self.order.len() == self.n
    }

    pub fn v(&self, k: usize) -> u32 {
        self.order[k - 1]
    }

    /// Communities `u_{k,1} < u_{k,2} < ...` of step `k`.
    pub fn communities(&self, k: usize) -> &[u32] {
        &self.comm_labels[self.comm_offsets[k - 1]..self.comm_offsets[k]]
    }

    /// `(#N_{k,1}, #N_{k,2}, ...)`.
    pub fn block_sizes(&self, k: usize) -> &[u32] {
        &self.n_sizes[self.comm_offsets[k - 1]..self.comm_offsets[k]]
    }

    /// `#N_k`.
    pub fn discovered(&self, k: usize) -> u32 {
        self.block_sizes(k).iter().sum()
    }

    /// Communities never reached: the isolated U-vertices appended to the forest.
    pub fn unreached_communities(&self) -> u64 {
        self.m as u64 - *self.r.last().unwrap_or(&0) as u64
    }

    /// Rank (1-based, top of the list first) of `w` in `A_{k-1}`, if active.
    pub fn active_rank(&self, k: usize, w: u32) -> Option<u32> {
        let wi = w as usize;
        let disc = self.disc_step[wi];
        let explored = self.explored_step[wi];
        let active = disc != NEVER && (disc as usize) < k && (explored == NEVER || explored as usize > k);
        active.then(|| self.active_before[k] - self.stack_pos[wi])
    }

    /// 1-based index of the component containing step `k`.
    pub fn component_of_step(&self, k: usize) -> usize {
        self.comp_bounds.partition_point(|&(_, hi)| hi < k) + 1
    }

    /// Trace export with columns `k,X,dS,S,H,comp`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,X,dS,S,H,comp")?;
        for k in 1..=self.len() {
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                self.x[k],
                self.s[k] - self.s[k - 1],
                self.s[k],
                self.h[k],
                self.component_of_step(k)
            )?;
        }
        Ok(())
    }
}

/// Runs the exploration to completion.
pub fn explore(graph: &BipartiteGraph, rule: RootRule) -> ExplorationTrace {
    explore_until(graph, rule, graph.n())
}

/// Runs at most `max_steps` steps of the exploration.
pub fn explore_until(graph: &BipartiteGraph, rule: RootRule, max_steps: usize) -> ExplorationTrace {
    let n = graph.n();
    let m = graph.m();
    let steps = max_steps.min(n);
    let slots = graph.nonempty_communities();

    let mut t = ExplorationTrace {
        n,
        m,
        order: Vec::with_capacity(steps),
        x: vec![0],
        comm_offsets: vec![0],
        comm_labels: Vec::new(),
        n_sizes: Vec::new(),
        r: vec![0],
        s: vec![0],
        h: Vec::new(),
        forest_edges: Vec::new(),
        comp_bounds: Vec::new(),
        open_component: None,
        active_before: vec![0],
        active_after: vec![0],
        unseen_before: vec![n as u32],
        unclaimed_before: vec![m as u64],
        disc_step: vec![NEVER; n],
        disc_block: vec![NEVER; n],
        explored_step: vec![NEVER; n],
        stack_pos: vec![NEVER; n],
        comm_step: vec![NEVER; slots],
        comm_block: vec![NEVER; slots],
    };

    let mut unseen = UnseenSet::new(n, rule);
    let mut stack: Vec<u32> = Vec::new();
    let mut unclaimed = m as u64;
    let mut comp_start = 0usize;
    let mut new_members: Vec<u32> = Vec::new();

    for k in 1..=steps {
        let v = match stack.pop() {
            Some(v) => v,
            None => {
                comp_start = k;
                unseen.take_root()
            }
        };
        t.order.push(v);
        t.explored_step[v as usize] = k as u32;
        t.active_before.push(stack.len() as u32);
        t.unseen_before.push(unseen.len() as u32);
        t.unclaimed_before.push(unclaimed);

        new_members.clear();
        let mut x = 0u32;
        for (&u, &slot) in graph.v_neighbors(v).iter().zip(graph.v_neighbor_slots(v)) {
            if t.comm_step[slot as usize] != NEVER {
                continue;
            }
            t.comm_step[slot as usize] = k as u32;
            t.comm_block[slot as usize] = x;
            unclaimed -= 1;
            t.forest_edges.push((Vertex::V(v), Vertex::U(u)));
            let mut size = 0u32;
            for &w in graph.slot_members(slot) {
                if unseen.contains(w) {
                    unseen.remove(w);
                    t.disc_step[w as usize] = k as u32;
                    t.disc_block[w as usize] = x;
                    t.forest_edges.push((Vertex::U(u), Vertex::V(w)));
                    new_members.push(w);
                    size += 1;
                }
            }
            t.comm_labels.push(u);
            t.n_sizes.push(size);
            x += 1;
        }
        t.comm_offsets.push(t.comm_labels.len());
        t.x.push(x);
        t.r.push(t.r[k - 1] + x as i64);
        t.s.push(t.s[k - 1] + new_members.len() as i64 - 1);

        new_members.sort_unstable();
        for &w in new_members.iter().rev() {
            t.stack_pos[w as usize] = stack.len() as u32;
            stack.push(w);
        }
        // A_k is A*_k without its first element, which v_{k+1} will be.
        t.active_after.push(stack.len().saturating_sub(1) as u32);
        if stack.is_empty() {
            t.comp_bounds.push((comp_start, k));
        }
    }
    if !stack.is_empty() {
        t.open_component = Some(comp_start);
    }
    t.h = height_from_walk(&t.s);
    t
}

/// Unseen individuals (`V*`), with the root-selection policy attached.
struct UnseenSet {
    seen: Vec<bool>,
    count: usize,
    mode: UnseenMode,
}

enum UnseenMode {
    Smallest { cursor: usize },
    Uniform { pool: Vec<u32>, pos: Vec<u32>, rng: crate::rng::ChaCha8Rng },
}

impl UnseenSet {
    fn new(n: usize, rule: RootRule) -> Self {
        let mode = match rule {
            RootRule::SmallestLabel => UnseenMode::Smallest { cursor: 0 },
            RootRule::UniformSeeded(seed) => UnseenMode::Uniform {
                pool: (0..n as u32).collect(),
                pos: (0..n as u32).collect(),
                rng: rng_from_seed(seed),
            },
        };
        UnseenSet { seen: vec![false; n], count: n, mode }
    }

    fn len(&self) -> usize {
        self.count
    }

    fn contains(&self, w: u32) -> bool {
        !self.seen[w as usize]
    }

    fn remove(&mut self, w: u32) {
        debug_assert!(!self.seen[w as usize]);
        self.seen[w as usize] = true;
        self.count -= 1;
        if let UnseenMode::Uniform { pool, pos, .. } = &mut self.mode {
            let i = pos[w as usize] as usize;
            let last = *pool.last().expect("pool non-empty");
            pool.swap_remove(i);
            if last != w {
                pos[last as usize] = i as u32;
            }
        }
    }

    fn take_root(&mut self) -> u32 {
        let root = match &mut self.mode {
            UnseenMode::Smallest { cursor } => {
                while self.seen[*cursor] {
                    *cursor += 1;
                }
                *cursor as u32
            }
            UnseenMode::Uniform { pool, rng, .. } => pool[rng.random_range(0..pool.len())],
        };
        self.remove(root);
        root
    }
}

/// Height functional: `H_k = #{0 <= j <= k-1 : s_j = min_{j <= i <= k-1} s_i}`.
///
/// Returns a vector of the same length as `s` with `H_0 = 0`.
pub fn height_from_walk(s: &[i64]) -> Vec<u32> {
    let mut h = Vec::with_capacity(s.len());
    if s.is_empty() {
        return h;
    }
    h.push(0);
    let mut minima: Vec<i64> = Vec::new();
    for k in 1..s.len() {
        let prev = s[k - 1];
        while minima.last().is_some_and(|&top| top > prev) {
            minima.pop();
        }
        minima.push(prev);
        h.push(minima.len() as u32);
    }
    h
}

/// `#A_k = s_k - min_{j <= k} s_j` for every `k`.
pub fn active_counts(s: &[i64]) -> Vec<u32> {
    let mut running = i64::MAX;
    s.iter()
        .map(|&v| {
            running = running.min(v);
            (v - running) as u32
        })
        .collect()
}

/// Height of `v_k` in the spanning forest, following parent pointers.
pub fn forest_height(trace: &ExplorationTrace, k: usize) -> Result<u32> {
    if k == 0 || k > trace.len() {
        return Err(Error::StepOutOfRange { step: k, len: trace.len() });
    }
    Ok(forest_heights(trace)[k])
}

/// Forest heights of `v_1, ..., v_len` (index 0 unused), computed from the
/// forest edges alone.
pub fn forest_heights(trace: &ExplorationTrace) -> Vec<u32> {
    let mut parent_of_v: Vec<Option<u32>> = vec![None; trace.n];
    let mut parent_of_u = std::collections::HashMap::new();
    for &(parent, child) in &trace.forest_edges {
        match (parent, child) {
            (Vertex::V(v), Vertex::U(u)) => {
                parent_of_u.insert(u, v);
            }
            (Vertex::U(u), Vertex::V(w)) => parent_of_v[w as usize] = Some(u),
            _ => unreachable!("forest edges join the two sides"),
        }
    }
    let mut height = vec![0u32; trace.n];
    let mut out = vec![0u32; trace.len() + 1];
    for (i, &v) in trace.order.iter().enumerate() {
        // parents are always explored before their children
        let hv = match parent_of_v[v as usize] {
            Some(u) => height[parent_of_u[&u] as usize] + 2,
            None => 0,
        };
        height[v as usize] = hv;
        out[i + 1] = hv;
    }
    out
}

/// A connected component of the explored part of `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    /// Number of individuals: the excursion length of `S`.
    pub v_size: usize,
    /// Number of communities.
    pub u_size: usize,
    pub first_step: usize,
    pub last_step: usize,
}

impl Component {
    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.first_step..=self.last_step
    }

    pub fn members<'a>(&self, trace: &'a ExplorationTrace) -> &'a [u32] {
        &trace.order[self.first_step - 1..self.last_step]
    }
}

/// Completed components ranked by V-size, ties by order of appearance.
pub fn components(trace: &ExplorationTrace) -> Vec<Component> {
    let mut out: Vec<Component> = trace
        .comp_bounds
        .iter()
        .map(|&(lo, hi)| Component {
            v_size: hi - lo + 1,
            u_size: (trace.r[hi] - trace.r[lo - 1]) as usize,
            first_step: lo,
            last_step: hi,
        })
        .collect();
    out.sort_by(|a, b| b.v_size.cmp(&a.v_size).then(a.first_step.cmp(&b.first_step)));
    out
}

/// Result of checking the exploration identities step by step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub steps_checked: usize,
    pub violations: usize,
    /// Up to the first 20 violation messages.
    pub messages: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0
    }

    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.messages.len() < 20 {
            self.messages.push(msg);
        }
    }
}

/// Checks every exploration identity against the measured trace quantities.
///
/// Covered: the partition identity `#V_{k-1} + #A_{k-1} + k = n`, the three
/// statements relating `S` to active counts and component boundaries, the
/// closed forms of `U_k` and `V_k`, and `2 H_k - 2 = ` forest height.
pub fn audit_trace(trace: &ExplorationTrace) -> AuditReport {
    let mut rep = AuditReport::default();
    let n = trace.n as i64;
    let m = trace.m as i64;
    let s = &trace.s;
    let heights = forest_heights(trace);
    let recomputed_h = height_from_walk(s);
    let mut min_before = 0i64; // min_{j <= k-1} s_j
    let mut closed = 0usize;
    for k in 1..=trace.len() {
        let ki = k as i64;
        let a_prev = trace.active_before[k] as i64;
        let v_prev = trace.unseen_before[k] as i64;
        if v_prev + a_prev + ki != n {
            rep.fail(format!("step {k}: #V + #A + k = {} != n", v_prev + a_prev + ki));
        }
        let min_k = min_before.min(s[k]);
        if s[k] - min_k != trace.active_after[k] as i64 {
            rep.fail(format!("step {k}: S - min S = {} but #A = {}", s[k] - min_k, trace.active_after[k]));
        }
        let closes = trace.comp_bounds.get(closed).is_some_and(|&(_, hi)| hi == k);
        if closes != (s[k] == min_before - 1) {
            rep.fail(format!("step {k}: component closing disagrees with walk minimum"));
        }
        let index = trace.component_of_step(k) as i64;
        if index != -min_before + 1 {
            rep.fail(format!("step {k}: component index {index} != {}", -min_before + 1));
        }
        let u_formula = m - trace.r[k - 1];
        if u_formula != trace.unclaimed_before[k] as i64 {
            rep.fail(format!("step {k}: U_k = {} but measured {}", u_formula, trace.unclaimed_before[k]));
        }
        let v_formula = n - ki - (s[k - 1] - min_before);
        if v_formula != v_prev {
            rep.fail(format!("step {k}: V_k = {v_formula} but measured {v_prev}"));
        }
        if 2 * trace.h[k] as i64 - 2 != heights[k] as i64 {
            rep.fail(format!("step {k}: 2H - 2 = {} but forest height {}", 2 * trace.h[k] as i64 - 2, heights[k]));
        }
        if trace.h[k] != recomputed_h[k] {
            rep.fail(format!("step {k}: stored H differs from height functional"));
        }
        if closes {
            closed += 1;
        }
        min_before = min_k;
        rep.steps_checked += 1;
    }
    // forest is acyclic: every explored tree has one edge fewer than vertices
    let vertices = trace.len() + *trace.r.last().unwrap_or(&0) as usize;
    let trees = trace.comp_bounds.len() + trace.open_component.is_some() as usize;
    let discovered_unexplored =
        trace.disc_step.iter().zip(&trace.explored_step).filter(|(&d, &e)| d != NEVER && e == NEVER).count();
    if trace.forest_edges.len() + trees != vertices + discovered_unexplored {
        rep.fail(format!(
            "forest has {} edges for {} vertices in {} trees",
            trace.forest_edges.len(),
            vertices + discovered_unexplored,
            trees
        ));
    }
    rep
}

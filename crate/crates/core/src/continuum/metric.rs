//! Metric spaces encoded by a nonnegative function and a set of shortcuts.

use super::{Excursion, LimitPath, ShortcutSet};
use crate::{Error, Result};

/// A function `h` on a uniform grid of `[0, zeta]` with shortcut pairs.
#[derive(Clone, Debug)]
pub struct MetricGraphSpec {
    h: Vec<f64>,
    pairs: Vec<(usize, usize)>,
    resolution: f64,
    /// `table[j][i] = min h[i .. i + 2^j]`.
    table: Vec<Vec<f64>>,
}

impl MetricGraphSpec {
    /// `pairs` are `(s, t)` times; they are snapped to the grid.
    pub fn new(h: Vec<f64>, pairs: &[(f64, f64)], resolution: f64) -> Result<Self> {
        if h.is_empty() || !(resolution > 0.0) {
            return Err(Error::InvalidConfig("spec needs a nonempty grid and positive resolution".into()));
        }
        if h.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidConfig("h must be finite and nonnegative".into()));
        }
        let last = h.len() - 1;
        let zeta = last as f64 * resolution;
        let mut snapped = Vec::with_capacity(pairs.len());
        for &(s, t) in pairs {
            let slack = 1e-9 * zeta.max(1.0);
            if !(s >= -slack && s <= t + slack && t <= zeta + slack) {
                return Err(Error::InvalidConfig(format!("shortcut ({s}, {t}) outside 0 <= s <= t <= {zeta}")));
            }
            let snap = |x: f64| ((x / resolution).round().max(0.0) as usize).min(last);
            snapped.push((snap(s), snap(t)));
        }
        let table = sparse_min_table(&h);
        Ok(MetricGraphSpec { h, pairs: snapped, resolution, table })
    }

    /// The height excursion of `path` over `exc` with the given shortcuts.
    pub fn from_excursion(path: &LimitPath, exc: &Excursion, shortcuts: &ShortcutSet) -> Result<Self> {
        Self::new(path.h[exc.start..=exc.end].to_vec(), &shortcuts.pairs, path.dt)
    }

    /// Same function sampled every `factor` grid points; shortcuts re-snapped.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        let h: Vec<f64> = self.h.iter().step_by(factor).copied().collect();
        let pairs: Vec<(f64, f64)> = self.shortcuts();
        let res = self.resolution * factor as f64;
        let zeta = (h.len() - 1) as f64 * res;
        let clamped: Vec<(f64, f64)> = pairs.iter().map(|&(s, t)| (s.min(zeta), t.min(zeta))).collect();
        Self::new(h, &clamped, res)
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn zeta(&self) -> f64 {
        (self.h.len() - 1) as f64 * self.resolution
    }

    /// Shortcut pairs as times.
    pub fn shortcuts(&self) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|&(s, t)| (s as f64 * self.resolution, t as f64 * self.resolution)).collect()
    }

    pub fn shortcut_count(&self) -> usize {
        self.pairs.len()
    }

    fn index(&self, x: f64) -> usize {
        ((x / self.resolution).round().max(0.0) as usize).min(self.h.len() - 1)
    }

    fn range_min(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let span = hi - lo + 1;
        let j = (usize::BITS - 1 - span.leading_zeros()) as usize;
        self.table[j][lo].min(self.table[j][hi + 1 - (1 << j)])
    }

    fn tree_distance_idx(&self, a: usize, b: usize) -> f64 {
        (self.h[a] + self.h[b] - 2.0 * self.range_min(a, b)).max(0.0)
    }

    /// `d_h(a, b) = h(a) + h(b) - 2 min_{[a, b]} h`, times snapped to the grid.
    pub fn tree_distance(&self, a: f64, b: f64) -> f64 {
        self.tree_distance_idx(self.index(a), self.index(b))
    }

    /// Shortest length of a path that alternates tree geodesics with free
    /// jumps between the two ends of a shortcut.
    pub fn graph_distance(&self, a: f64, b: f64) -> f64 {
        let mut nodes = vec![self.index(a), self.index(b)];
        for &(s, t) in &self.pairs {
            nodes.push(s);
            nodes.push(t);
        }
        let k = nodes.len();
        // dense Dijkstra: the node set is tiny
        let mut dist = vec![f64::INFINITY; k];
        let mut done = vec![false; k];
        dist[0] = 0.0;
        for _ in 0..k {
            let Some(x) = (0..k).filter(|&i| !done[i]).min_by(|&i, &j| dist[i].total_cmp(&dist[j])) else {
                break;
            };
            done[x] = true;
            if x == 1 {
                break;
            }
            for y in 0..k {
                if done[y] {
                    continue;
                }
                let mut w = self.tree_distance_idx(nodes[x], nodes[y]);
                if x >= 2 && y >= 2 && (x - 2) / 2 == (y - 2) / 2 {
                    w = 0.0;
                }
                if dist[x] + w < dist[y] {
                    dist[y] = dist[x] + w;
                }
            }
        }
        dist[1]
    }

    /// Value of the zero extension at time `x`, linearly interpolated.
    fn extended(&self, x: f64) -> f64 {
        let pos = x / self.resolution;
        let last = self.h.len() - 1;
        if pos < 0.0 || pos > last as f64 + 1e-9 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(last);
        if i == last {
            return self.h[last];
        }
        let frac = pos - i as f64;
        self.h[i] + (self.h[i + 1] - self.h[i]) * frac
    }
}

fn sparse_min_table(h: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![h.to_vec()];
    let mut width = 1;
    while 2 * width <= h.len() {
        let prev = table.last().unwrap();
        let next: Vec<f64> = (0..=h.len() - 2 * width).map(|i| prev[i].min(prev[i + width])).collect();
        table.push(next);
        width *= 2;
    }
    table
}

/// `sup{|h(s) - h(t)| : |s - t| <= delta}` on the grid of `spec`, including the
/// drop to zero past `zeta`.
pub fn modulus_of_continuity(spec: &MetricGraphSpec, delta: f64) -> f64 {
    let mut h = spec.h.clone();
    h.push(0.0);
    let w = ((delta / spec.resolution) + 1e-9).floor() as usize;
    if w == 0 {
        return 0.0;
    }
    // sliding window of w + 1 consecutive samples
    let mut best = 0.0f64;
    let mut maxq: std::collections::VecDeque<usize> = Default::default();
    let mut minq: std::collections::VecDeque<usize> = Default::default();
    for i in 0..h.len() {
        while maxq.back().is_some_and(|&j| h[j] <= h[i]) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| h[j] >= h[i]) {
            minq.pop_back();
        }
        minq.push_back(i);
        while maxq.front().is_some_and(|&j| j + w < i) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j + w < i) {
            minq.pop_front();
        }
        best = best.max(h[maxq[0]] - h[minq[0]]);
    }
    best
}

/// Upper bound `6 (q + 1) (||h1 - h2||_inf + omega_delta(h1)) + |zeta1 - zeta2|`
/// on the GHP distance between the two encoded spaces, `q` being the common
/// number of shortcuts. Returns `+inf` when the shortcut counts differ and an
/// error when some shortcut pair is not matched within `delta`.
pub fn ghp_upper_bound(spec1: &MetricGraphSpec, spec2: &MetricGraphSpec, delta: f64) -> Result<f64> {
    if spec1.shortcut_count() != spec2.shortcut_count() {
        return Ok(f64::INFINITY);
    }
    let slack = 1e-9 * delta.max(1.0);
    for (p1, p2) in spec1.shortcuts().iter().zip(spec2.shortcuts()) {
        if (p1.0 - p2.0).abs() > delta + slack || (p1.1 - p2.1).abs() > delta + slack {
            return Err(Error::InvalidConfig(format!("shortcuts {p1:?} and {p2:?} differ by more than {delta}")));
        }
    }
    let q = spec1.shortcut_count() as f64;
    // both extensions are piecewise linear, so the sup sits on a breakpoint
    let mut sup = 0.0f64;
    for spec in [spec1, spec2] {
        for i in 0..=spec.h.len() {
            let x = i as f64 * spec.resolution;
            sup = sup.max((spec1.extended(x) - spec2.extended(x)).abs());
        }
    }
    let omega = modulus_of_continuity(spec1, delta);
    Ok(6.0 * (q + 1.0) * (sup + omega) + (spec1.zeta() - spec2.zeta()).abs())
}

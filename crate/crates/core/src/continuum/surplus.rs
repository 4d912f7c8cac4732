//! Poisson surplus points under the reflected walk and the shortcuts they induce.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::{Excursion, LimitPath};
use crate::rng::rng_from_seed;

/// Unit-rate Poisson points under the piecewise-linear curve through
/// `(x0 + i dt, values[i])`. Returns atoms `(x, y)` in absolute coordinates.
pub fn sample_poisson_under_curve(values: &[f64], x0: f64, dt: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = rng_from_seed(seed);
    poisson_under_curve(values, x0, dt, &mut rng)
}

fn poisson_under_curve<R: Rng>(values: &[f64], x0: f64, dt: f64, rng: &mut R) -> Vec<(f64, f64)> {
    if values.len() < 2 {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(values.len() - 1);
    let mut total = 0.0;
    for w in values.windows(2) {
        total += 0.5 * (w[0].max(0.0) + w[1].max(0.0)) * dt;
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(total).map(|d| d.sample(rng) as usize).unwrap_or(0);
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * total;
        let cell = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let (a, b) = (values[cell].max(0.0), values[cell + 1].max(0.0));
        let top = a.max(b);
        // uniform point under the segment by rejection from its bounding box
        loop {
            let u: f64 = rng.random();
            let y = rng.random::<f64>() * top;
            if y <= a + (b - a) * u {
                atoms.push((x0 + (cell as f64 + u) * dt, y));
                break;
            }
        }
    }
    atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
    atoms
}

/// Surplus atoms of excursion `exc`: Poisson points of unit rate under
/// `S - min S` on `(g, d)`.
pub fn sample_poisson_surplus(path: &LimitPath, exc: &Excursion, seed: u64) -> Vec<(f64, f64)> {
    let reflected = path.reflected();
    sample_poisson_under_curve(&reflected[exc.start..=exc.end], exc.g, path.dt, seed)
}

/// Trapezoid area under `S - min S` over the excursion.
pub fn excursion_area(path: &LimitPath, exc: &Excursion) -> f64 {
    let reflected = path.reflected();
    reflected[exc.start..=exc.end].windows(2).map(|w| 0.5 * (w[0] + w[1]) * path.dt).sum()
}

/// Area of `{(x, y) : 0 <= x <= x_max, 0 <= y <= min(S_x - min S, y_max)}`
/// for the piecewise-linear interpolation of the path.
pub fn box_area(path: &LimitPath, x_max: f64, y_max: f64) -> f64 {
    let reflected = path.reflected();
    let dt = path.dt;
    let mut area = 0.0;
    for (i, w) in reflected.windows(2).enumerate() {
        let x = i as f64 * dt;
        if x >= x_max {
            break;
        }
        let frac = ((x_max - x) / dt).min(1.0);
        // restrict the segment to [x, x + frac dt]
        let (a, b) = (w[0], w[0] + (w[1] - w[0]) * frac);
        area += clipped_segment_area(a, b, y_max) * frac * dt;
    }
    area
}

/// `int_0^1 min(a + (b - a) u, c) du` for `a, b >= 0`.
fn clipped_segment_area(a: f64, b: f64, c: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi <= c {
        0.5 * (a + b)
    } else if lo >= c {
        c
    } else {
        // fraction of the segment below the cap
        let below = (c - lo) / (hi - lo);
        below * 0.5 * (lo + c) + (1.0 - below) * c
    }
}

/// Shortcut pairs `(s_i, t_i)` in excursion-local time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortcutSet {
    pub pairs: Vec<(f64, f64)>,
    pub zeta: f64,
}

impl ShortcutSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Turns surplus atoms into shortcuts.
///
/// The atom abscissa is snapped to the nearest grid point `x` of the
/// excursion and `t = x - g`. Scanning left from `x`, `s + g` is the leftmost
/// grid point `u >= g` with `min_{[u, x]} S >= S_x - y`, i.e. the time at which
/// the walk last sat below level `S_x - y` before `x`.
pub fn shortcuts_from_atoms(path: &LimitPath, exc: &Excursion, atoms: &[(f64, f64)]) -> ShortcutSet {
    let pairs = atoms
        .iter()
        .map(|&(x, y)| {
            let ix = ((x / path.dt).round() as usize).clamp(exc.start, exc.end);
            let level = path.s[ix] - y;
            let mut u = ix;
            while u > exc.start && path.s[u - 1] >= level {
                u -= 1;
            }
            ((u - exc.start) as f64 * path.dt, (ix - exc.start) as f64 * path.dt)
        })
        .collect();
    ShortcutSet { pairs, zeta: exc.zeta }
}

#[cfg(test)]
mod tests {
    use super::super::{excursions, simulate_limit_path, HorizonPolicy, LimitParams};
    use super::*;

    #[test]
    fn zero_area_no_atoms() {
        assert!(sample_poisson_under_curve(&[0.0, 0.0, 0.0], 0.0, 0.1, 3).is_empty());
        assert!(sample_poisson_under_curve(&[1.0], 0.0, 0.1, 3).is_empty());
    }

    #[test]
    fn rectangle_counts_are_poisson() {
        // height 5 over [0, 1]: area 5
        let curve = vec![5.0; 11];
        let reps = 2000;
        let mut total = 0usize;
        for r in 0..reps {
            let atoms = sample_poisson_under_curve(&curve, 0.0, 0.1, r);
            assert!(atoms.iter().all(|&(x, y)| (0.0..=1.0).contains(&x) && (0.0..=5.0).contains(&y)));
            total += atoms.len();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 5.0).abs() < 3.0 * (5.0 / reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn clipped_area_cases() {
        assert_eq!(clipped_segment_area(1.0, 3.0, 5.0), 2.0);
        assert_eq!(clipped_segment_area(6.0, 7.0, 5.0), 5.0);
        // 0 -> 2 capped at 1: half under the ramp (area 0.25), half at 1 (0.5)
        assert!((clipped_segment_area(0.0, 2.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((clipped_segment_area(2.0, 0.0, 1.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn shortcuts_stay_in_square_and_follow_examples() {
        let path = simulate_limit_path(LimitParams::infinite(1.0), 1e-3, 5.0, 17).unwrap();
        let ex = excursions(&path, HorizonPolicy::Drop);
        let e = ex.intervals[0];
        let reflected = path.reflected();
        let mid = (e.start + e.end) / 2;
        let x = path.time(mid);
        let full = shortcuts_from_atoms(&path, &e, &[(x, reflected[mid])]);
        assert_eq!(full.pairs[0].0, 0.0);
        let none = shortcuts_from_atoms(&path, &e, &[(x, 0.0)]);
        assert!(none.pairs[0].0 <= none.pairs[0].1);
        let mut last_s = f64::INFINITY;
        for j in 0..=20 {
            let y = reflected[mid] * j as f64 / 20.0;
            let s = shortcuts_from_atoms(&path, &e, &[(x, y)]).pairs[0].0;
            assert!(s <= last_s);
            last_s = s;
        }
        let atoms = sample_poisson_surplus(&path, &e, 4);
        for &(ax, ay) in &atoms {
            assert!(ax >= e.g && ax <= e.d);
            let i = ((ax / path.dt).floor() as usize).min(e.end - 1);
            assert!(ay <= reflected[i].max(reflected[i + 1]) + 1e-12);
        }
        let set = shortcuts_from_atoms(&path, &e, &atoms);
        for &(s, t) in &set.pairs {
            assert!(0.0 <= s && s <= t && t <= e.zeta + 1e-12);
        }
    }

    #[test]
    fn degenerate_shortcut_on_monotone_rise() {
        // strictly increasing then drop: y = 0 gives s = t
        let mut p = simulate_limit_path(LimitParams::infinite(0.0), 1.0, 5.0, 0).unwrap();
        p.s = vec![0.0, 1.0, 2.0, 3.0, -1.0, -2.0];
        let ex = excursions(&p, HorizonPolicy::Drop);
        let e = ex.intervals[0];
        let set = shortcuts_from_atoms(&p, &e, &[(2.0, 0.0)]);
        assert_eq!(set.pairs[0], (2.0, 2.0));
    }
}

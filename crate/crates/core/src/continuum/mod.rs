//! Continuum limit objects on a uniform time grid.
//!
//! Paths are sampled exactly at grid points: Brownian increments are i.i.d.
//! `Normal(0, dt)` and the quadratic drift is evaluated in closed form.

mod metric;
mod scaling;
mod surplus;

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

pub use metric::{ghp_upper_bound, modulus_of_continuity, MetricGraphSpec};
pub use scaling::{kappa_scaling_check, KappaReport};
pub use surplus::{
    box_area, excursion_area, sample_poisson_surplus, sample_poisson_under_curve, shortcuts_from_atoms, ShortcutSet,
};

/// Parameters `(lambda, theta)` of a limit process; `theta = +inf` gives the
/// Erdos-Renyi type walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub lambda: f64,
    pub theta: f64,
}

impl LimitParams {
    pub fn new(lambda: f64, theta: f64) -> Self {
        LimitParams { lambda, theta }
    }

    pub fn infinite(lambda: f64) -> Self {
        LimitParams { lambda, theta: f64::INFINITY }
    }

    pub fn is_infinite(&self) -> bool {
        self.theta.is_infinite()
    }

    /// Variance rate `1 + theta^{-1/2}` of `S`.
    pub fn variance_rate(&self) -> f64 {
        1.0 + self.theta.powf(-0.5)
    }

    /// Factor `c` in `H = c (S - min S)`.
    pub fn height_factor(&self) -> f64 {
        2.0 / self.variance_rate()
    }

    /// Deterministic part of `S_t`.
    pub fn s_drift(&self, t: f64) -> f64 {
        2.0 * self.lambda * t - 0.5 * self.variance_rate() * t * t
    }

    /// Deterministic part of `R_t` (finite `theta` only).
    pub fn r_drift(&self, t: f64) -> f64 {
        self.theta.sqrt() * self.lambda * t - 0.5 * t * t
    }
}

/// Source of the Brownian increments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Noise {
    Brownian,
    /// `W = W* = 0`: drift only.
    Zero,
}

/// A discretized limit path on the grid `{0, dt, ..., T}`.
#[derive(Clone, Debug)]
pub struct LimitPath {
    pub params: LimitParams,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub s: Vec<f64>,
    /// Community walk, present for finite `theta`.
    pub r: Option<Vec<f64>>,
    pub h: Vec<f64>,
}

impl LimitPath {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Reflected walk `S - min S` at every grid point.
    pub fn reflected(&self) -> Vec<f64> {
        let mut running = f64::INFINITY;
        self.s
            .iter()
            .map(|&v| {
                running = running.min(v);
                v - running
            })
            .collect()
    }

    /// Path export with columns `t,S,R,H`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,S,R,H")?;
        for i in 0..self.len() {
            let r = self.r.as_ref().map(|r| r[i].to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", self.time(i), self.s[i], r, self.h[i])?;
        }
        Ok(())
    }
}

/// Samples `S^{lambda, theta}` (and `R^{lambda, theta}` for finite `theta`).
pub fn simulate_limit_path(params: LimitParams, dt: f64, horizon: f64, seed: u64) -> Result<LimitPath> {
    simulate_limit_path_with(params, dt, horizon, seed, Noise::Brownian)
}

pub fn simulate_limit_path_with(
    params: LimitParams,
    dt: f64,
    horizon: f64,
    seed: u64,
    noise: Noise,
) -> Result<LimitPath> {
    if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
        return Err(Error::InvalidConfig(format!("need dt > 0 and T > 0, got dt = {dt}, T = {horizon}")));
    }
    if !(params.theta > 0.0) {
        return Err(Error::InvalidConfig(format!("theta must be positive, got {}", params.theta)));
    }
    let steps = (horizon / dt).round().max(1.0) as usize;
    let finite = !params.is_infinite();
    let mut rng = rng_from_seed(seed);
    let sd = dt.sqrt();
    let w_star_weight = if finite { params.theta.powf(-0.25) } else { 0.0 };
    let r_weight = params.theta.powf(0.25);

    let mut s = Vec::with_capacity(steps + 1);
    let mut r = finite.then(|| Vec::with_capacity(steps + 1));
    let (mut w, mut w_star) = (0.0f64, 0.0f64);
    for i in 0..=steps {
        if i > 0 && noise == Noise::Brownian {
            w += sd * rng.sample::<f64, _>(StandardNormal);
            if finite {
                w_star += sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let t = i as f64 * dt;
        s.push(w + w_star_weight * w_star + params.s_drift(t));
        if let Some(r) = r.as_mut() {
            r.push(r_weight * w_star + params.r_drift(t));
        }
    }
    let mut path = LimitPath { params, dt, horizon: steps as f64 * dt, seed, s, r, h: Vec::new() };
    path.h = height_of_path(&path);
    Ok(path)
}

/// `H = c (S - min S)`.
pub fn height_of_path(path: &LimitPath) -> Vec<f64> {
    let c = path.params.height_factor();
    path.reflected().into_iter().map(|x| c * x).collect()
}

/// What to do with an excursion still running at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HorizonPolicy {
    #[default]
    Drop,
    Truncate,
}

/// An excursion of `S` above its running minimum.
///
/// `start` and `end` are the grid indices of `g` and `d`; `S` exceeds its
/// running minimum at every grid point strictly between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Excursion {
    pub start: usize,
    pub end: usize,
    pub g: f64,
    pub d: f64,
    pub zeta: f64,
    /// Cut at the horizon rather than closed.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionList {
    /// Ranked by length, longest first.
    pub intervals: Vec<Excursion>,
    /// An excursion straddled the horizon and was dropped.
    pub dropped_final: bool,
}

impl ExcursionList {
    pub fn lengths(&self) -> Vec<f64> {
        self.intervals.iter().map(|e| e.zeta).collect()
    }

    /// Export with columns `k,g,d,zeta,shortcuts`; `shortcuts[k]` is `#Pi` of
    /// the `k`-th excursion when known.
    pub fn write_csv<W: Write>(&self, shortcuts: &[usize], mut out: W) -> Result<()> {
        writeln!(out, "k,g,d,zeta,shortcuts")?;
        for (k, e) in self.intervals.iter().enumerate() {
            let q = shortcuts.get(k).map(|q| q.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{q}", k + 1, e.g, e.d, e.zeta)?;
        }
        Ok(())
    }
}

/// Maximal grid excursions of `S` above its running minimum, ranked.
pub fn excursions(path: &LimitPath, policy: HorizonPolicy) -> ExcursionList {
    let reflected = path.reflected();
    let last = reflected.len() - 1;
    let mut intervals = Vec::new();
    let mut dropped_final = false;
    let mut i = 1;
    while i <= last {
        if reflected[i] > 0.0 {
            let a = i;
            while i <= last && reflected[i] > 0.0 {
                i += 1;
            }
            let (end, truncated) = if i > last { (last, true) } else { (i, false) };
            if truncated && policy == HorizonPolicy::Drop {
                dropped_final = true;
                break;
            }
            let start = a - 1;
            intervals.push(Excursion {
                start,
                end,
                g: path.time(start),
                d: path.time(end),
                zeta: (end - start) as f64 * path.dt,
                truncated,
            });
        }
        i += 1;
    }
    intervals.sort_by(|a, b| b.zeta.total_cmp(&a.zeta).then(a.start.cmp(&b.start)));
    ExcursionList { intervals, dropped_final }
}

/// Ranked excursion lengths of one fresh path.
pub fn sample_ranked_lengths(params: LimitParams, dt: f64, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    let path = simulate_limit_path(params, dt, horizon, seed)?;
    Ok(excursions(&path, HorizonPolicy::Drop).lengths())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manual_path(s: Vec<f64>, dt: f64) -> LimitPath {
        let mut p = LimitPath {
            params: LimitParams::infinite(0.0),
            dt,
            horizon: (s.len() - 1) as f64 * dt,
            seed: 0,
            s,
            r: None,
            h: Vec::new(),
        };
        p.h = height_of_path(&p);
        p
    }

    #[test]
    fn zero_noise_is_pure_drift() {
        let p = simulate_limit_path_with(LimitParams::new(0.0, 1.0), 0.01, 2.0, 1, Noise::Zero).unwrap();
        for i in 0..p.len() {
            let t = p.time(i);
            assert!((p.s[i] + t * t).abs() < 1e-12);
            assert_eq!(p.h[i], 0.0);
        }
        assert!(excursions(&p, HorizonPolicy::Drop).intervals.is_empty());
    }

    #[test]
    fn height_factors() {
        let flat = manual_path(vec![0.0, 1.0], 1.0);
        assert_eq!(flat.h[1], 2.0);
        let mut moderate = flat.clone();
        moderate.params = LimitParams::new(0.0, 1.0);
        assert_eq!(height_of_path(&moderate)[1], 1.0);
        let down = manual_path(vec![0.0, -1.0, -3.0], 1.0);
        assert!(down.h.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn single_bump_length() {
        let dt = 0.1;
        let mut s = vec![0.0];
        s.extend((1..17).map(|i| (i as f64 * std::f64::consts::PI / 17.0).sin()));
        s.extend([0.0, -0.5, -1.0]);
        let p = manual_path(s, dt);
        let ex = excursions(&p, HorizonPolicy::Drop);
        assert_eq!(ex.intervals.len(), 1);
        assert!((ex.intervals[0].zeta - 17.0 * dt).abs() < 1e-12);
        assert!(!ex.dropped_final);
    }

    #[test]
    fn horizon_policy() {
        let p = manual_path(vec![0.0, 1.0, 0.0, -1.0, 0.5, 1.0], 1.0);
        let dropped = excursions(&p, HorizonPolicy::Drop);
        assert!(dropped.dropped_final);
        assert_eq!(dropped.lengths(), vec![2.0]);
        let kept = excursions(&p, HorizonPolicy::Truncate);
        assert_eq!(kept.lengths(), vec![2.0, 2.0]);
        assert!(kept.intervals.iter().any(|e| e.truncated));
    }

    #[test]
    fn ranked_and_disjoint() {
        let p = simulate_limit_path(LimitParams::infinite(1.0), 1e-3, 6.0, 9).unwrap();
        let ex = excursions(&p, HorizonPolicy::Drop);
        assert!(ex.intervals.windows(2).all(|w| w[0].zeta >= w[1].zeta));
        let mut by_start = ex.intervals.clone();
        by_start.sort_by_key(|e| e.start);
        assert!(by_start.windows(2).all(|w| w[0].end <= w[1].start));
        for e in &ex.intervals {
            assert!(p.h[e.start + 1..e.end].iter().all(|&h| h > 0.0));
        }
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(simulate_limit_path(LimitParams::infinite(0.0), 0.0, 1.0, 0).is_err());
        assert!(simulate_limit_path(LimitParams::new(0.0, -1.0), 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn marginal_moments() {
        // Var S_1 = 1 at theta = inf; Cov(R_1, S_1) = 1 at theta = 1
        let reps = 4000;
        let (mut sum, mut sum2, mut cov) = (0.0, 0.0, 0.0);
        let (mut rs, mut ss) = (0.0, 0.0);
        for r in 0..reps {
            let p = simulate_limit_path(LimitParams::infinite(0.0), 0.05, 1.0, r).unwrap();
            let x = *p.s.last().unwrap() + 0.5;
            sum += x;
            sum2 += x * x;
            let q = simulate_limit_path(LimitParams::new(0.0, 1.0), 0.05, 1.0, 10_000 + r).unwrap();
            let a = q.r.as_ref().unwrap().last().unwrap() + 0.5;
            let b = q.s.last().unwrap() + 1.0;
            cov += a * b;
            rs += a;
            ss += b;
        }
        let n = reps as f64;
        let var = sum2 / n - (sum / n).powi(2);
        assert!((var - 1.0).abs() < 4.0 * (2.0f64 / n).sqrt());
        let c = cov / n - (rs / n) * (ss / n);
        // Var(R S) = Var R Var S + Cov^2 = 1 * 2 + 1 = 3
        assert!((c - 1.0).abs() < 4.0 * (3.0 / n).sqrt());
    }
}

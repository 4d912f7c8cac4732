//! Poisson surrogate walks, i.i.d. reference walks and the discrete density
//! between them.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compensated_sum, StatReport};
use crate::exploration::{explore_until, height_from_walk, RootRule};
use crate::regimes::{Regime, RegimeConfig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::sample_bipartite;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurrogateKind {
    /// Poisson increments with the depleting rates `U_k p`, `X_k V_k p`.
    PoissonCheck,
    /// Fixed rates `alpha_n`, `X_k beta_n`.
    IidHat,
}

/// A surrogate of the depth-first walk. Vectors indexed by step with an
/// unused (zero) entry at index 0.
#[derive(Clone, Debug)]
pub struct SurrogateWalk {
    pub kind: SurrogateKind,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub x: Vec<u64>,
    pub r: Vec<i64>,
    pub s: Vec<i64>,
    pub h: Vec<u32>,
    /// Rates used: `U_k` and `V_k` (as counts) for each step.
    pub u: Vec<u64>,
    pub v: Vec<u64>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_star: f64,
}

impl SurrogateWalk {
    pub fn len(&self) -> usize {
        self.x.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `max(lambda, 0) + 1`.
pub fn default_lambda_star(lambda: f64) -> f64 {
    lambda.max(0.0) + 1.0
}

/// `(alpha_n, beta_n)` of the i.i.d. walk.
fn hat_rates(config: &RegimeConfig, lambda_star: f64) -> Result<(f64, f64)> {
    let n = config.n as f64;
    let m = config.m as f64;
    let p = config.p;
    let (alpha, beta) = match config.regime {
        Regime::Moderate => {
            let theta = config.limit_theta();
            let shift = lambda_star * n.powf(-1.0 / 3.0);
            (m * p - theta.sqrt() * shift, n * p - shift / theta.sqrt())
        }
        Regime::Light => (m * p, n * p - 2.0 * lambda_star * m.powf(-0.5) * n.powf(1.0 / 6.0)),
        Regime::Heavy => {
            return Err(Error::InvalidConfig("surrogate walks are defined for the light and moderate regimes".into()))
        }
    };
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidConfig(format!("n too small: alpha = {alpha}, beta = {beta}")));
    }
    Ok((alpha, beta))
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

/// Samples `steps` steps of a surrogate walk.
pub fn sample_surrogate(
    kind: SurrogateKind,
    config: &RegimeConfig,
    lambda_star: f64,
    steps: usize,
    seed: u64,
) -> Result<SurrogateWalk> {
    if config.regime == Regime::Heavy {
        return Err(Error::InvalidConfig("surrogate walks are defined for the light and moderate regimes".into()));
    }
    let (alpha, beta) = match kind {
        SurrogateKind::IidHat => {
            if !(lambda_star > config.lambda.max(0.0)) {
                return Err(Error::InvalidConfig(format!(
                    "lambda_star = {lambda_star} must exceed max(lambda, 0) = {}",
                    config.lambda.max(0.0)
                )));
            }
            hat_rates(config, lambda_star)?
        }
        SurrogateKind::PoissonCheck => (f64::NAN, f64::NAN),
    };
    let (n, m, p) = (config.n, config.m, config.p);
    let mut rng = rng_from_seed(seed);
    let mut w = SurrogateWalk {
        kind,
        n,
        m,
        p,
        x: vec![0],
        r: vec![0],
        s: vec![0],
        h: Vec::new(),
        u: vec![0],
        v: vec![0],
        alpha,
        beta,
        lambda_star,
    };
    let mut min_s = 0i64;
    for k in 1..=steps {
        let u_k = (m as i64 - w.r[k - 1]).max(0) as u64;
        let v_k = (n as i64 - k as i64 - (w.s[k - 1] - min_s)).max(0) as u64;
        let (x, jump) = match kind {
            SurrogateKind::PoissonCheck => {
                let x = poisson(u_k as f64 * p, &mut rng);
                (x, poisson(x as f64 * v_k as f64 * p, &mut rng))
            }
            SurrogateKind::IidHat => {
                let x = poisson(alpha, &mut rng);
                (x, poisson(x as f64 * beta, &mut rng))
            }
        };
        w.u.push(u_k);
        w.v.push(v_k);
        w.x.push(x);
        w.r.push(w.r[k - 1] + x as i64);
        let s = w.s[k - 1] + jump as i64 - 1;
        w.s.push(s);
        min_s = min_s.min(s);
    }
    w.h = height_from_walk(&w.s);
    Ok(w)
}

/// Re-derives the rates of every step from the walk and checks them.
pub fn audit_surrogate(walk: &SurrogateWalk) -> bool {
    let mut min_s = 0i64;
    for k in 1..=walk.len() {
        let u_k = (walk.m as i64 - walk.r[k - 1]).max(0) as u64;
        let v_k = (walk.n as i64 - k as i64 - (walk.s[k - 1] - min_s)).max(0) as u64;
        if walk.u[k] != u_k || walk.v[k] != v_k {
            return false;
        }
        if walk.r[k] - walk.r[k - 1] != walk.x[k] as i64 || walk.s[k] - walk.s[k - 1] < -1 {
            return false;
        }
        if walk.x[k] == 0 && walk.s[k] - walk.s[k - 1] != -1 {
            return false;
        }
        min_s = min_s.min(walk.s[k]);
    }
    walk.h == height_from_walk(&walk.s)
}

/// Density of the Poisson surrogate law against the i.i.d. walk, evaluated
/// on the first `steps` steps of an i.i.d. walk. Computed as a compensated sum
/// of logs; exactly 0 when a step has a zero rate but a positive jump.
pub fn rn_derivative(walk: &SurrogateWalk, steps: usize) -> Result<f64> {
    if walk.kind != SurrogateKind::IidHat {
        return Err(Error::InvalidConfig("the density is evaluated on i.i.d. walks".into()));
    }
    if steps > walk.len() {
        return Err(Error::StepOutOfRange { step: steps, len: walk.len() });
    }
    let (alpha, beta, p) = (walk.alpha, walk.beta, walk.p);
    let mut terms = Vec::with_capacity(4 * steps);
    for k in 1..=steps {
        let dr = walk.x[k] as f64;
        let jump = (walk.s[k] - walk.s[k - 1] + 1) as f64;
        let up = walk.u[k] as f64 * p;
        let vp = walk.v[k] as f64 * p;
        if (up == 0.0 && dr > 0.0) || (vp == 0.0 && jump > 0.0) {
            return Ok(0.0);
        }
        if dr > 0.0 {
            terms.push(dr * (up / alpha).ln());
        }
        if jump > 0.0 {
            terms.push(jump * (vp / beta).ln());
        }
        terms.push(alpha - up);
        terms.push(dr * (beta - vp));
    }
    Ok(compensated_sum(terms).exp())
}

/// Binned total-variation comparison between the explored walk and the
/// Poisson surrogate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvCheck {
    /// Largest binned TV over all compared marginals.
    pub tv: f64,
    /// Same statistic between two independent surrogate samples.
    pub null_tv: f64,
    pub replicates: usize,
}

/// Marginals compared: `(X_k, dS_k)` jointly at a few steps, and `S` at the
/// same steps, binned at pooled deciles.
pub fn surrogate_tv_check(config: &RegimeConfig, steps: usize, replicates: usize, seed: u64) -> Result<(StatReport, TvCheck)> {
    if config.regime == Regime::Heavy {
        return Err(Error::InvalidConfig("surrogate walks are defined for the light and moderate regimes".into()));
    }
    let steps = steps.clamp(4, config.n);
    let probes = [steps / 4, steps / 2, steps];
    let walk_of = |source: u8, r: u64| -> Result<(Vec<i64>, Vec<i64>)> {
        let s = derive_seed(seed, 3 * r + source as u64);
        Ok(match source {
            0 => {
                let g = sample_bipartite(config, s);
                let t = explore_until(&g, RootRule::UniformSeeded(s ^ 0x5eed), steps);
                (t.x.iter().map(|&x| x as i64).collect(), t.s)
            }
            _ => {
                let w = sample_surrogate(SurrogateKind::PoissonCheck, config, 0.0, steps, s)?;
                (w.x.iter().map(|&x| x as i64).collect(), w.s)
            }
        })
    };
    let collect = |source: u8| -> Result<Vec<(Vec<i64>, Vec<i64>)>> {
        (0..replicates as u64).into_par_iter().map(|r| walk_of(source, r)).collect()
    };
    let truth = collect(0)?;
    let check_a = collect(1)?;
    let check_b = collect(2)?;
    let stat = |a: &[(Vec<i64>, Vec<i64>)], b: &[(Vec<i64>, Vec<i64>)]| -> f64 {
        let mut worst = 0.0f64;
        for &k in &probes {
            let joint = |w: &(Vec<i64>, Vec<i64>)| {
                let x = w.0[k].min(6);
                let ds = (w.1[k] - w.1[k - 1]).min(6);
                x * 16 + ds + 1
            };
            worst = worst.max(categorical_tv(a.iter().map(joint), b.iter().map(joint)));
            let sa: Vec<f64> = a.iter().map(|w| w.1[k] as f64).collect();
            let sb: Vec<f64> = b.iter().map(|w| w.1[k] as f64).collect();
            worst = worst.max(decile_tv(&sa, &sb));
        }
        worst
    };
    let tv = stat(&truth, &check_a);
    let null_tv = stat(&check_b, &check_a);
    let report = StatReport::new("surrogate_binned_tv", tv, 0.0, 3.0 * null_tv, replicates, null_tv)
        .with_detail(format!("n = {}, steps = {steps}, null level {null_tv:.4}", config.n));
    Ok((report, TvCheck { tv, null_tv, replicates }))
}

fn categorical_tv(a: impl Iterator<Item = i64>, b: impl Iterator<Item = i64>) -> f64 {
    use std::collections::HashMap;
    let mut counts: HashMap<i64, (f64, f64)> = HashMap::new();
    let (mut na, mut nb) = (0.0, 0.0);
    for x in a {
        counts.entry(x).or_default().0 += 1.0;
        na += 1.0;
    }
    for x in b {
        counts.entry(x).or_default().1 += 1.0;
        nb += 1.0;
    }
    0.5 * counts.values().map(|&(ca, cb)| (ca / na - cb / nb).abs()).sum::<f64>()
}

fn decile_tv(a: &[f64], b: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (1..10).map(|q| pooled[q * pooled.len() / 10]).collect();
    edges.dedup();
    let bin = |x: f64| edges.partition_point(|&e| e < x) as i64;
    categorical_tv(a.iter().map(|&x| bin(x)), b.iter().map(|&x| bin(x)))
}

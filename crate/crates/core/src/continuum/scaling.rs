//! The scaling identity `S^{lambda, theta}_t = kappa S^{lambda_theta, inf}_{kappa t}` in law.

use serde::Serialize;

use super::{simulate_limit_path, simulate_limit_path_with, LimitParams, Noise};
use crate::regimes::kappa_theta;
use crate::rng::derive_seed;
use crate::validation::{ks_critical_value, ks_distance, mean_var};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaReport {
    pub theta: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// Largest drift difference over the grid with the noise switched off.
    pub drift_max_diff: f64,
    /// `|(1 + theta^{-1/2}) t - kappa^3 t|` at the horizon.
    pub variance_identity_diff: f64,
    /// Largest `|mean difference| / stderr` over the check times.
    pub max_mean_z: f64,
    /// Largest relative difference of sample variances over the check times.
    pub max_var_rel_diff: f64,
    /// Two-sample KS distance of the horizon marginals.
    pub ks: f64,
    /// 0.1% critical value of the two-sample KS statistic.
    pub ks_critical: f64,
    pub replicates: usize,
    pub pass: bool,
}

/// Compares `S^{lambda, theta}` against `kappa S^{lambda_theta, inf}_{kappa .}`.
///
/// The right-hand side is sampled on the grid `kappa dt` up to `kappa T`, so
/// grid point `i` of both paths sits at limit time `i dt`.
pub fn kappa_scaling_check(
    theta: f64,
    lambda: f64,
    dt: f64,
    horizon: f64,
    replicates: usize,
    seed: u64,
) -> Result<KappaReport> {
    let scaling = kappa_theta(theta);
    let kappa = scaling.kappa;
    let left = LimitParams::new(lambda, theta);
    let right = LimitParams::infinite(scaling.lambda_theta(lambda));

    let a = simulate_limit_path_with(left, dt, horizon, 0, Noise::Zero)?;
    let b = simulate_limit_path_with(right, kappa * dt, kappa * horizon, 0, Noise::Zero)?;
    let drift_max_diff = a.s.iter().zip(&b.s).map(|(x, y)| (x - kappa * y).abs()).fold(0.0, f64::max);
    let variance_identity_diff = (left.variance_rate() * horizon - kappa.powi(3) * horizon).abs();

    let steps = a.len() - 1;
    let checks = [steps / 4, steps / 2, steps];
    let mut lhs: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); 3];
    let mut rhs: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); 3];
    for r in 0..replicates as u64 {
        let p = simulate_limit_path(left, dt, horizon, derive_seed(seed, 2 * r))?;
        let q = simulate_limit_path(right, kappa * dt, kappa * horizon, derive_seed(seed, 2 * r + 1))?;
        for (c, &i) in checks.iter().enumerate() {
            lhs[c].push(p.s[i]);
            rhs[c].push(kappa * q.s[i]);
        }
    }
    let mut max_mean_z = 0.0f64;
    let mut max_var_rel_diff = 0.0f64;
    for c in 0..3 {
        let (m1, v1) = mean_var(&lhs[c]);
        let (m2, v2) = mean_var(&rhs[c]);
        let se = ((v1 + v2) / replicates as f64).sqrt();
        if se > 0.0 {
            max_mean_z = max_mean_z.max((m1 - m2).abs() / se);
        }
        let scale = v1.max(v2);
        if scale > 0.0 {
            max_var_rel_diff = max_var_rel_diff.max((v1 - v2).abs() / scale);
        }
    }
    let ks = ks_distance(&lhs[2], &rhs[2]);
    let ks_critical = ks_critical_value(replicates, replicates, 0.001);
    // 4-sigma on the means; variances of n samples fluctuate by ~ sqrt(2/n) each
    let var_tol = 4.0 * (4.0 / replicates.max(1) as f64).sqrt();
    let pass = drift_max_diff < 1e-9
        && variance_identity_diff < 1e-9
        && max_mean_z <= 4.0
        && max_var_rel_diff <= var_tol
        && ks <= ks_critical;
    Ok(KappaReport {
        theta,
        lambda,
        kappa,
        drift_max_diff,
        variance_identity_diff,
        max_mean_z,
        max_var_rel_diff,
        ks,
        ks_critical,
        replicates,
        pass,
    })
}

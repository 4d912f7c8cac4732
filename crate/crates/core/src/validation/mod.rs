//! Statistical machinery: surrogate walks, the discrete density against the
//! i.i.d. walk, moment oracles and comparison statistics.

mod moments;
mod surrogate;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::Result;

pub use moments::{
    binom_tail_bound, factorial_moment_binomial, factorial_moment_poisson, falling_factorial,
    raw_moment_binomial, raw_moment_poisson, stirling2, tv_binomial_poisson,
};
pub use surrogate::{
    audit_surrogate, default_lambda_star, rn_derivative, sample_surrogate, surrogate_tv_check, SurrogateKind,
    SurrogateWalk, TvCheck,
};

/// Outcome of one statistical comparison: `pass` iff
/// `|observed - reference| <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub observed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub replicates: usize,
    /// NaN when there is none (KS statistics); written as `null`.
    #[serde(deserialize_with = "null_as_nan")]
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl StatReport {
    pub fn new(
        name: impl Into<String>,
        observed: f64,
        reference: f64,
        tolerance: f64,
        replicates: usize,
        stderr: f64,
    ) -> Self {
        let pass = (observed - reference).abs() <= tolerance;
        StatReport { name: name.into(), observed, reference, tolerance, pass, replicates, stderr, detail: String::new() }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Rewrites the tolerance and recomputes `pass`.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = (self.observed - self.reference).abs() <= tolerance;
        self
    }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[StatReport], mut out: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Sample mean and unbiased variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 { x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Compares the sample mean against `reference` with tolerance `z` standard errors.
pub fn mean_report(name: impl Into<String>, samples: &[f64], reference: f64, z: f64) -> StatReport {
    let (mean, var) = mean_var(samples);
    let se = (var / samples.len() as f64).sqrt();
    StatReport::new(name, mean, reference, z * se, samples.len(), se)
}

/// Compares the sample variance against `reference` with tolerance `z`
/// standard errors, the error coming from the fourth central moment.
pub fn variance_report(name: impl Into<String>, samples: &[f64], reference: f64, z: f64) -> StatReport {
    let n = samples.len() as f64;
    let (mean, var) = mean_var(samples);
    let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    StatReport::new(name, var, reference, z * se, samples.len(), se)
}

/// Mean and (when given) variance reports against reference moments `[mean, variance]`.
pub fn moment_report(name: &str, samples: &[f64], reference_moments: &[f64], z: f64) -> Vec<StatReport> {
    let mut out = Vec::new();
    if let Some(&m) = reference_moments.first() {
        out.push(mean_report(format!("{name}.mean"), samples, m, z));
    }
    if let Some(&v) = reference_moments.get(1) {
        out.push(variance_report(format!("{name}.variance"), samples, v, z));
    }
    out
}

/// Two-sample Kolmogorov-Smirnov distance `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        // step past every copy of x on both sides before comparing
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical_value(n1: usize, n2: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (a, b) = (n1.max(1) as f64, n2.max(1) as f64);
    c * ((a + b) / (a * b)).sqrt()
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

//! Critical-window parameterizations and the closed-form quantities attached to them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `m / n -> infinity`: clustering vanishes.
    Light,
    /// `m / n -> theta`.
    Moderate,
    /// `m / n -> 0`: clustering tends to one.
    Heavy,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Light => "light",
            Regime::Moderate => "moderate",
            Regime::Heavy => "heavy",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "light" => Ok(Regime::Light),
            "moderate" => Ok(Regime::Moderate),
            "heavy" => Ok(Regime::Heavy),
            other => Err(Error::InvalidConfig(format!("unknown regime {other:?}"))),
        }
    }
}

/// How the community count `m` is derived from `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Moderate regime: `m = round(theta * n)`.
    Theta(f64),
    /// Light (`alpha > 1`) or heavy (`alpha < 1`): `m = round(n^alpha)`.
    Aspect(f64),
    /// Explicit community count.
    Communities(usize),
}

/// A fully resolved `(n, m, p)` inside one of the three critical windows.
///
/// `p` is stored exactly as used for sampling so serialized configs replay
/// bit-identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub regime: Regime,
    pub lambda: f64,
    /// Only set for the moderate regime.
    pub theta: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub p: f64,
}

/// Largest supported side: labels are stored as `u32`.
pub const MAX_SIDE: usize = u32::MAX as usize;

pub fn build_config(regime: Regime, lambda: f64, shape: Shape, n: usize) -> Result<RegimeConfig> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("n must be at least 2, got {n}")));
    }
    if n > MAX_SIDE {
        return Err(Error::InvalidConfig(format!("n = {n} exceeds {MAX_SIDE}")));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be finite, got {lambda}")));
    }
    let nf = n as f64;
    let (m, theta) = match (regime, shape) {
        (Regime::Moderate, Shape::Theta(theta)) => {
            if !(theta > 0.0 && theta.is_finite()) {
                return Err(Error::InvalidConfig(format!("theta must be positive, got {theta}")));
            }
            ((theta * nf).round() as usize, Some(theta))
        }
        (Regime::Moderate, other) => {
            return Err(Error::InvalidConfig(format!(
                "moderate regime takes theta, got {other:?}"
            )))
        }
        (_, Shape::Theta(_)) => {
            return Err(Error::InvalidConfig(format!(
                "{} regime takes an aspect exponent or explicit m",
                regime.as_str()
            )))
        }
        (Regime::Light, Shape::Aspect(alpha)) => {
            if !(alpha > 1.0) {
                return Err(Error::InvalidConfig(format!("light regime needs aspect > 1, got {alpha}")));
            }
            (round_power(nf, alpha)?, None)
        }
        (Regime::Heavy, Shape::Aspect(alpha)) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "heavy regime needs aspect in (0, 1), got {alpha}"
                )));
            }
            (round_power(nf, alpha)?, None)
        }
        (_, Shape::Communities(m)) => (m, None),
    };
    if m == 0 || m > MAX_SIDE {
        return Err(Error::InvalidConfig(format!("community count m = {m} out of range")));
    }
    match regime {
        Regime::Light if m <= n => {
            return Err(Error::InvalidConfig(format!("light regime needs m > n, got m = {m}, n = {n}")))
        }
        Regime::Heavy if m >= n => {
            return Err(Error::InvalidConfig(format!("heavy regime needs m < n, got m = {m}, n = {n}")))
        }
        _ => {}
    }
    let mf = m as f64;
    let window = match regime {
        Regime::Light | Regime::Moderate => nf.powf(-1.0 / 3.0),
        Regime::Heavy => mf.powf(-1.0 / 3.0),
    };
    let p = (1.0 + lambda * window) / (mf * nf).sqrt();
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("edge probability p = {p} outside [0, 1]")));
    }
    Ok(RegimeConfig { regime, lambda, theta, n, m, p })
}

fn round_power(base: f64, alpha: f64) -> Result<usize> {
    let m = base.powf(alpha).round();
    if !(m >= 1.0 && m <= MAX_SIDE as f64) {
        return Err(Error::InvalidConfig(format!("n^{alpha} = {m} out of range")));
    }
    Ok(m as usize)
}

impl RegimeConfig {
    /// Exact `(n, m, p)` record with arbitrary `p`, used by fixtures and tests.
    pub fn custom(regime: Regime, n: usize, m: usize, p: f64) -> Result<Self> {
        if n == 0 || m == 0 || n > MAX_SIDE || m > MAX_SIDE {
            return Err(Error::InvalidConfig(format!("sides out of range: n = {n}, m = {m}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("edge probability p = {p} outside [0, 1]")));
        }
        Ok(RegimeConfig { regime, lambda: 0.0, theta: None, n, m, p })
    }

    /// Side explored by the depth-first walk: `(explored, other)`.
    ///
    /// The heavy regime explores the transposed graph `B(m, n, p)`.
    pub fn explored_sides(&self) -> (usize, usize) {
        match self.regime {
            Regime::Heavy => (self.m, self.n),
            _ => (self.n, self.m),
        }
    }

    /// `theta` used by limit formulas: the configured value for the moderate
    /// regime, `+inf` otherwise.
    pub fn limit_theta(&self) -> f64 {
        self.theta.unwrap_or(f64::INFINITY)
    }
}

/// Rescaling factors between discrete observables and their limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSet {
    /// Exploration steps per unit of limit time.
    pub time_scale: f64,
    /// Factor applied to `S`, `H` and surplus ranks.
    pub walk_scale: f64,
    /// Factor applied to the community walk `R` (or `R - sqrt(theta) k`).
    pub community_scale: f64,
    pub distance_scale: f64,
    pub mass_scale: f64,
    pub triangle_scale: f64,
}

pub fn scaling_set(config: &RegimeConfig) -> ScalingSet {
    let n = config.n as f64;
    let m = config.m as f64;
    match config.regime {
        Regime::Moderate => ScalingSet {
            time_scale: n.powf(2.0 / 3.0),
            walk_scale: n.powf(-1.0 / 3.0),
            community_scale: n.powf(-1.0 / 3.0),
            distance_scale: n.powf(-1.0 / 3.0),
            mass_scale: n.powf(-2.0 / 3.0),
            triangle_scale: n.powf(-2.0 / 3.0),
        },
        Regime::Light => ScalingSet {
            time_scale: n.powf(2.0 / 3.0),
            walk_scale: n.powf(-1.0 / 3.0),
            community_scale: n.powf(-1.0 / 6.0) * m.powf(-0.5),
            distance_scale: n.powf(-1.0 / 3.0),
            mass_scale: n.powf(-2.0 / 3.0),
            triangle_scale: m.sqrt() * n.powf(-7.0 / 6.0),
        },
        Regime::Heavy => ScalingSet {
            time_scale: m.powf(2.0 / 3.0),
            walk_scale: m.powf(-1.0 / 3.0),
            community_scale: m.powf(-1.0 / 6.0) * n.powf(-0.5),
            distance_scale: m.powf(-1.0 / 3.0),
            mass_scale: m.powf(-1.0 / 6.0) * n.powf(-0.5),
            triangle_scale: m.powf(5.0 / 6.0) * n.powf(-1.5),
        },
    }
}

/// Expected degree `(n - 1)(1 - (1 - p^2)^m)` of a fixed individual.
pub fn expected_degree(config: &RegimeConfig) -> f64 {
    let p2 = config.p * config.p;
    if p2 >= 1.0 {
        return (config.n - 1) as f64;
    }
    let edge_prob = -((config.m as f64) * (-p2).ln_1p()).exp_m1();
    (config.n - 1) as f64 * edge_prob
}

/// Limit of the clustering coefficient in each regime.
pub fn clustering_limit(config: &RegimeConfig) -> f64 {
    match config.regime {
        Regime::Light => 0.0,
        Regime::Heavy => 1.0,
        Regime::Moderate => 1.0 / (1.0 + config.limit_theta().sqrt()),
    }
}

/// Triangle-density constant of the moderate regime.
pub fn c_theta(theta: f64) -> f64 {
    1.0 / (2.0 * theta.sqrt()) + 1.0 / (6.0 * theta)
}

/// `kappa_theta = (1 + theta^{-1/2})^{1/3}`; `theta = inf` gives 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaScaling {
    pub kappa: f64,
}

impl KappaScaling {
    /// `lambda_theta = lambda * kappa^{-2}`.
    pub fn lambda_theta(&self, lambda: f64) -> f64 {
        lambda / (self.kappa * self.kappa)
    }
}

pub fn kappa_theta(theta: f64) -> KappaScaling {
    KappaScaling { kappa: (1.0 + theta.powf(-0.5)).cbrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn moderate_unit_theta() {
        let c = build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 1_000_000).unwrap();
        assert_eq!(c.m, 1_000_000);
        assert_relative_eq!(c.p, 1e-6, max_relative = 1e-15);
    }

    #[test]
    fn moderate_theta_four() {
        let c = build_config(Regime::Moderate, 2.0, Shape::Theta(4.0), 1_000_000).unwrap();
        assert_eq!(c.m, 4_000_000);
        assert_relative_eq!(c.p, (1.0 + 2.0e-2) / 2.0e6, max_relative = 1e-14);
    }

    #[test]
    fn heavy_explicit_m() {
        let c = build_config(Regime::Heavy, -1.0, Shape::Communities(10_000), 1_000_000).unwrap();
        let expected = (1.0 - 10f64.powf(-4.0 / 3.0)) / 1e5;
        assert_relative_eq!(c.p, expected, max_relative = 1e-14);
    }

    #[test]
    fn aspect_exponents() {
        let light = build_config(Regime::Light, 0.0, Shape::Aspect(2.0), 100).unwrap();
        assert_eq!(light.m, 10_000);
        let heavy = build_config(Regime::Heavy, 0.0, Shape::Aspect(0.5), 10_000).unwrap();
        assert_eq!(heavy.m, 100);
    }

    #[test]
    fn rejections() {
        assert!(build_config(Regime::Moderate, 0.0, Shape::Theta(0.0), 100).is_err());
        assert!(build_config(Regime::Moderate, 0.0, Shape::Theta(-1.0), 100).is_err());
        assert!(build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 1).is_err());
        assert!(build_config(Regime::Light, 0.0, Shape::Communities(50), 100).is_err());
        assert!(build_config(Regime::Heavy, 0.0, Shape::Communities(500), 100).is_err());
        assert!(build_config(Regime::Light, 0.0, Shape::Aspect(0.5), 100).is_err());
        // p > 1
        assert!(build_config(Regime::Moderate, 50.0, Shape::Theta(1.0), 8).is_err());
        // p < 0
        assert!(build_config(Regime::Moderate, -50.0, Shape::Theta(1.0), 8).is_err());
    }

    #[test]
    fn scaling_examples() {
        let c = build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 1_000_000).unwrap();
        let s = scaling_set(&c);
        assert_relative_eq!(s.distance_scale, 1e-2, max_relative = 1e-12);
        assert_relative_eq!(s.mass_scale, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(s.triangle_scale, 1e-4, max_relative = 1e-12);
        assert_relative_eq!(s.time_scale * s.mass_scale, 1.0, max_relative = 1e-12);

        let h = RegimeConfig::custom(Regime::Heavy, 1_000_000_000, 1_000_000, 1e-8).unwrap();
        let s = scaling_set(&h);
        assert_relative_eq!(s.mass_scale, 10f64.powf(-5.5), max_relative = 1e-12);
        assert_relative_eq!(s.time_scale, 1e4, max_relative = 1e-12);

        let l = RegimeConfig::custom(Regime::Light, 1_000_000, 100_000_000, 1e-7).unwrap();
        assert_relative_eq!(scaling_set(&l).triangle_scale, 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn degree_examples() {
        let zero = RegimeConfig::custom(Regime::Moderate, 10, 10, 0.0).unwrap();
        assert_eq!(expected_degree(&zero), 0.0);
        let tiny = RegimeConfig::custom(Regime::Moderate, 3, 2, 0.5).unwrap();
        assert_relative_eq!(expected_degree(&tiny), 0.875, max_relative = 1e-14);
        let c = build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 1_000_000).unwrap();
        assert!((expected_degree(&c) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn clustering_limits() {
        let light = build_config(Regime::Light, 0.0, Shape::Aspect(1.5), 100).unwrap();
        let moderate = build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 100).unwrap();
        let heavy = build_config(Regime::Heavy, 0.0, Shape::Aspect(0.5), 100).unwrap();
        assert_eq!(clustering_limit(&light), 0.0);
        assert_eq!(clustering_limit(&moderate), 0.5);
        assert_eq!(clustering_limit(&heavy), 1.0);
    }

    #[test]
    fn c_theta_values() {
        assert_relative_eq!(c_theta(1.0), 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c_theta(4.0), 7.0 / 24.0, max_relative = 1e-15);
        // Poisson(1) factorial moments: E[X^3] - E[X] = 5 - 1.
        assert_relative_eq!(c_theta(1.0), 4.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(kappa_theta(1.0).kappa, 2f64.cbrt(), max_relative = 1e-15);
        assert_relative_eq!(kappa_theta(0.25).kappa, 3f64.cbrt(), max_relative = 1e-15);
        assert_eq!(kappa_theta(f64::INFINITY).kappa, 1.0);
        assert!((kappa_theta(1e12).kappa - 1.0).abs() < 1e-6);
        let k = kappa_theta(1.0);
        assert_relative_eq!(k.lambda_theta(2.0), 2.0 / 2f64.powf(2.0 / 3.0), max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn window_identity(lambda in -3.0f64..3.0, theta in 0.1f64..10.0, n in 1000usize..10_000_000) {
            let c = build_config(Regime::Moderate, lambda, Shape::Theta(theta), n).unwrap();
            let lhs = c.p * ((c.m as f64) * (c.n as f64)).sqrt() - 1.0;
            let rhs = lambda * (n as f64).powf(-1.0 / 3.0);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn heavy_window_identity(lambda in -3.0f64..3.0, alpha in 0.2f64..0.9, n in 10_000usize..10_000_000) {
            let c = build_config(Regime::Heavy, lambda, Shape::Aspect(alpha), n).unwrap();
            let lhs = c.p * ((c.m as f64) * (c.n as f64)).sqrt() - 1.0;
            let rhs = lambda * (c.m as f64).powf(-1.0 / 3.0);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let s = scaling_set(&c);
            let mass = (c.m as f64).powf(-1.0 / 6.0) * (c.n as f64).powf(-0.5);
            prop_assert!((s.mass_scale / mass - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_theta(a in 0.05f64..20.0, b in 0.05f64..20.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(c_theta(lo) > c_theta(hi));
            let cfg = |t| build_config(Regime::Moderate, 0.0, Shape::Theta(t), 10_000).unwrap();
            prop_assert!(clustering_limit(&cfg(lo)) > clustering_limit(&cfg(hi)));
        }
    }
}

//! End-to-end experiments: replicate-parallel runs of the sampler and the
//! exploration, aggregated into [`StatReport`]s and raw CSV samples.

mod targets;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::regimes::{build_config, Regime, RegimeConfig, Shape};
use crate::rng::derive_seed;
use crate::validation::{write_jsonl, StatReport};
use crate::{Error, Result};

pub use targets::{
    run_clustering, run_component_sizes, run_surplus, run_triangles, run_walk_law, TargetOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    WalkLaw,
    ComponentSizes,
    TriangleModerate,
    TriangleLight,
    TriangleHeavy,
    SurplusMeasure,
    ClusteringCoefficient,
    TriangleCritLight,
}

impl Target {
    pub const ALL: [Target; 8] = [
        Target::WalkLaw,
        Target::ComponentSizes,
        Target::TriangleModerate,
        Target::TriangleLight,
        Target::TriangleHeavy,
        Target::SurplusMeasure,
        Target::ClusteringCoefficient,
        Target::TriangleCritLight,
    ];

    /// File stem of the target's outputs.
    pub fn as_str(self) -> &'static str {
        match self {
            Target::WalkLaw => "walk_law",
            Target::ComponentSizes => "component_sizes",
            Target::TriangleModerate => "triangle_moderate",
            Target::TriangleLight => "triangle_light",
            Target::TriangleHeavy => "triangle_heavy",
            Target::SurplusMeasure => "surplus_measure",
            Target::ClusteringCoefficient => "clustering_coefficient",
            Target::TriangleCritLight => "triangle_crit_light",
        }
    }

    /// Whether the target is defined for `regime`.
    pub fn supports(self, regime: Regime) -> bool {
        match self {
            Target::WalkLaw | Target::ComponentSizes | Target::ClusteringCoefficient => true,
            Target::TriangleModerate => regime == Regime::Moderate,
            Target::TriangleLight | Target::TriangleCritLight => regime == Regime::Light,
            Target::TriangleHeavy => regime == Regime::Heavy,
            Target::SurplusMeasure => regime != Regime::Heavy,
        }
    }

    /// Seed stream of the target, independent of which other targets run.
    fn stream(self) -> u64 {
        0x7a47_0000 + Target::ALL.iter().position(|&t| t == self).unwrap() as u64
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str() == s || format!("{t:?}") == s)
            .ok_or_else(|| Error::InvalidPlan(format!("unknown target {s:?}")))
    }
}

/// Pass thresholds. Every statistical report states the one it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Standard errors allowed on means, variances and covariances.
    pub z: f64,
    /// Two-sample KS bound for the ranked component sizes.
    pub ks: f64,
    /// Level of the KS critical value used against simulated marginals.
    pub ks_alpha: f64,
    /// Relative error allowed on the triangle process; by regime when unset
    /// (5% moderate, 10% light, 15% heavy).
    pub triangle_rel: Option<f64>,
    pub clustering_z: f64,
    pub crit_light_z: f64,
    /// Share of paired batches that must show the expected trend.
    pub trend_fraction: f64,
    /// Share of heavy replicates whose largest component is the same under
    /// both vertex masses.
    pub ranking_agreement: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z: 4.0,
            ks: 0.12,
            ks_alpha: 0.001,
            triangle_rel: None,
            clustering_z: 3.0,
            crit_light_z: 3.0,
            trend_fraction: 2.0 / 3.0,
            ranking_agreement: 0.9,
        }
    }
}

impl Tolerances {
    pub fn triangle_rel_for(&self, regime: Regime) -> f64 {
        self.triangle_rel.unwrap_or(match regime {
            Regime::Moderate => 0.05,
            Regime::Light => 0.10,
            Regime::Heavy => 0.15,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub name: String,
    pub config: RegimeConfig,
    pub replicates: usize,
    /// Limit time `t` at which walk and process statistics are read.
    pub horizon_t: f64,
    pub seed: u64,
    pub targets: Vec<Target>,
    /// Grid step of continuum simulations.
    pub dt: f64,
    /// Limit-time horizon of component statistics (both discrete and continuum).
    pub continuum_horizon: f64,
    pub continuum_paths: usize,
    /// Second size for trend checks, same shape as `config`.
    pub compare_n: Option<usize>,
    /// Height of the surplus box `[0, t] x [0, box_height]`.
    pub box_height: f64,
    /// Number of paired batches in trend checks.
    pub trend_batches: usize,
    pub tolerances: Tolerances,
    /// Root of `<name>/<target>.{jsonl,csv}`; nothing is written when unset.
    pub output_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn new(config: RegimeConfig) -> Self {
        ExperimentPlan {
            name: "campaign".into(),
            config,
            replicates: 200,
            horizon_t: 1.0,
            seed: 0,
            targets: Vec::new(),
            dt: 1e-3,
            continuum_horizon: 15.0,
            continuum_paths: 500,
            compare_n: None,
            box_height: 2.0,
            trend_batches: 9,
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }

    pub fn with_targets(mut self, targets: &[Target]) -> Self {
        self.targets = targets.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        if let Some(t) = self.targets.iter().find(|t| !t.supports(self.config.regime)) {
            return bad(format!("target {} is not defined for the {} regime", t.as_str(), self.config.regime.as_str()));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return bad(format!("horizon_t must be positive, got {}", self.horizon_t));
        }
        if !(self.dt > 0.0 && self.continuum_horizon > 0.0 && self.dt < self.continuum_horizon) {
            return bad(format!("need 0 < dt < continuum_horizon, got {} and {}", self.dt, self.continuum_horizon));
        }
        if !(self.box_height > 0.0) {
            return bad(format!("box_height must be positive, got {}", self.box_height));
        }
        if !self.targets.is_empty() && self.replicates < 2 {
            return bad("at least 2 replicates are needed for a standard error".into());
        }
        let uses_paths = self.targets.iter().any(|t| {
            matches!(t, Target::ComponentSizes | Target::SurplusMeasure | Target::TriangleModerate)
        });
        if uses_paths && self.continuum_paths < 2 {
            return bad("at least 2 continuum paths are needed".into());
        }
        if self.trend_batches == 0 {
            return bad("trend_batches must be positive".into());
        }
        let t = &self.tolerances;
        let nonneg = [t.z, t.ks, t.clustering_z, t.crit_light_z, t.triangle_rel.unwrap_or(0.0)];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return bad("tolerances must be non-negative".into());
        }
        if !(t.ks_alpha > 0.0 && t.ks_alpha < 1.0) {
            return bad(format!("ks_alpha must lie in (0, 1), got {}", t.ks_alpha));
        }
        if let Some(n2) = self.compare_n {
            config_at(&self.config, n2)?;
        }
        Ok(())
    }

    fn target_seed(&self, target: Target) -> u64 {
        derive_seed(self.seed, target.stream())
    }
}

/// The configuration of the same shape at size `n`: same `theta` (moderate),
/// same aspect exponent (light) or same `m` (heavy).
pub fn config_at(config: &RegimeConfig, n: usize) -> Result<RegimeConfig> {
    let shape = match config.regime {
        Regime::Moderate => Shape::Theta(config.limit_theta()),
        Regime::Light => Shape::Aspect((config.m as f64).ln() / (config.n as f64).ln()),
        Regime::Heavy => Shape::Communities(config.m),
    };
    build_config(config.regime, config.lambda, shape, n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetResult {
    pub target: Target,
    pub pass: bool,
    pub reports: Vec<StatReport>,
    /// Set when the target could not run; the campaign carries on.
    pub error: Option<String>,
    pub seed: u64,
    pub seconds: f64,
    pub jsonl: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignResult {
    pub name: String,
    pub seed: u64,
    pub config: RegimeConfig,
    pub targets: Vec<TargetResult>,
    pub seconds: f64,
}

impl CampaignResult {
    pub fn pass(&self) -> bool {
        self.targets.iter().all(|t| t.pass)
    }

    pub fn target(&self, target: Target) -> Option<&TargetResult> {
        self.targets.iter().find(|t| t.target == target)
    }

    /// Report by exact name across all targets.
    pub fn report(&self, name: &str) -> Option<&StatReport> {
        self.targets.iter().flat_map(|t| &t.reports).find(|r| r.name == name)
    }
}

/// Runs one target without touching the file system.
pub fn run_target(plan: &ExperimentPlan, target: Target) -> Result<TargetOutcome> {
    if !target.supports(plan.config.regime) {
        return Err(Error::InvalidPlan(format!(
            "target {} is not defined for the {} regime",
            target.as_str(),
            plan.config.regime.as_str()
        )));
    }
    let seed = plan.target_seed(target);
    match target {
        Target::WalkLaw => run_walk_law(plan, seed),
        Target::ComponentSizes => run_component_sizes(plan, seed),
        Target::TriangleModerate | Target::TriangleLight | Target::TriangleHeavy | Target::TriangleCritLight => {
            run_triangles(plan, target, seed)
        }
        Target::SurplusMeasure => run_surplus(plan, seed),
        Target::ClusteringCoefficient => run_clustering(plan, seed),
    }
}

/// Runs every target of the plan and writes its artifacts.
pub fn run_campaign(plan: &ExperimentPlan) -> Result<CampaignResult> {
    plan.validate()?;
    let started = Instant::now();
    let dir = plan.output_dir.as_ref().map(|d| d.join(&plan.name));
    if let Some(dir) = &dir {
        fs::create_dir_all(dir)?;
    }
    let mut targets = Vec::with_capacity(plan.targets.len());
    for &target in &plan.targets {
        let t0 = Instant::now();
        let mut result = TargetResult {
            target,
            pass: false,
            reports: Vec::new(),
            error: None,
            seed: plan.target_seed(target),
            seconds: 0.0,
            jsonl: None,
            csv: None,
        };
        match run_target(plan, target) {
            Ok(outcome) => {
                if let Some(dir) = &dir {
                    let (jsonl, csv) = write_outcome(dir, target, &outcome)?;
                    result.jsonl = Some(jsonl);
                    result.csv = Some(csv);
                }
                result.pass = outcome.pass;
                result.reports = outcome.reports;
            }
            Err(e) => result.error = Some(e.to_string()),
        }
        result.seconds = t0.elapsed().as_secs_f64();
        targets.push(result);
    }
    let result = CampaignResult {
        name: plan.name.clone(),
        seed: plan.seed,
        config: plan.config.clone(),
        targets,
        seconds: started.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &dir {
        let file = fs::File::create(dir.join("campaign.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &result)?;
    }
    Ok(result)
}

fn write_outcome(dir: &Path, target: Target, outcome: &TargetOutcome) -> Result<(PathBuf, PathBuf)> {
    let jsonl = dir.join(format!("{}.jsonl", target.as_str()));
    let csv = dir.join(format!("{}.csv", target.as_str()));
    write_jsonl(&outcome.reports, std::io::BufWriter::new(fs::File::create(&jsonl)?))?;
    fs::write(&csv, &outcome.csv)?;
    Ok((jsonl, csv))
}

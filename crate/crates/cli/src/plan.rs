//! JSON experiment plans.

use std::path::{Path, PathBuf};

use rig_core::campaigns::{ExperimentPlan, Target, Tolerances};
use rig_core::{build_config, Error, Regime, Result, Shape};
use serde::Deserialize;

/// Community count of a light or heavy plan.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MOrAspect {
    M(usize),
    Aspect(f64),
}

/// On-disk plan. Unknown keys are rejected; every key but `regime`, `n` and
/// `targets` has a default.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub regime: Regime,
    #[serde(default)]
    pub lambda: f64,
    /// Moderate regime only.
    pub theta: Option<f64>,
    pub n: usize,
    /// Light and heavy regimes only.
    pub m_or_aspect: Option<MOrAspect>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_horizon")]
    pub horizon_t: f64,
    #[serde(default)]
    pub seed: u64,
    pub targets: Vec<Target>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_continuum_horizon")]
    pub continuum_horizon: f64,
    #[serde(default = "default_paths")]
    pub continuum_paths: usize,
    pub compare_n: Option<usize>,
    #[serde(default = "default_box_height")]
    pub box_height: f64,
    #[serde(default = "default_batches")]
    pub trend_batches: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_name() -> String {
    "campaign".into()
}
fn default_replicates() -> usize {
    200
}
fn default_horizon() -> f64 {
    1.0
}
fn default_output() -> PathBuf {
    "results".into()
}
fn default_dt() -> f64 {
    1e-3
}
fn default_continuum_horizon() -> f64 {
    15.0
}
fn default_paths() -> usize {
    500
}
fn default_box_height() -> f64 {
    2.0
}
fn default_batches() -> usize {
    9
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidPlan(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidPlan(format!("{}: {e}", path.display())))
    }

    pub fn into_plan(self) -> Result<ExperimentPlan> {
        let shape = match (self.regime, self.theta, &self.m_or_aspect) {
            (Regime::Moderate, Some(theta), None) => Shape::Theta(theta),
            (Regime::Moderate, _, _) => {
                return Err(Error::InvalidPlan("a moderate plan takes theta and no m_or_aspect".into()))
            }
            (_, None, Some(MOrAspect::M(m))) => Shape::Communities(*m),
            (_, None, Some(MOrAspect::Aspect(a))) => Shape::Aspect(*a),
            (r, _, _) => {
                return Err(Error::InvalidPlan(format!(
                    "a {} plan takes m_or_aspect and no theta",
                    r.as_str()
                )))
            }
        };
        let config = build_config(self.regime, self.lambda, shape, self.n)?;
        let mut plan = ExperimentPlan::new(config).with_targets(&self.targets);
        plan.name = self.name;
        plan.replicates = self.replicates;
        plan.horizon_t = self.horizon_t;
        plan.seed = self.seed;
        plan.dt = self.dt;
        plan.continuum_horizon = self.continuum_horizon;
        plan.continuum_paths = self.continuum_paths;
        plan.compare_n = self.compare_n;
        plan.box_height = self.box_height;
        plan.trend_batches = self.trend_batches;
        plan.tolerances = self.tolerances;
        plan.output_dir = Some(self.output_dir);
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> std::result::Result<PlanFile, serde_json::Error> {
        serde_json::from_str(s)
    }

    #[test]
    fn minimal_plan_gets_defaults() {
        let p = parse(r#"{"regime": "moderate", "theta": 1, "n": 1000, "targets": ["WalkLaw"]}"#).unwrap();
        assert_eq!(p.replicates, 200);
        assert_eq!(p.output_dir, PathBuf::from("results"));
        let plan = p.into_plan().unwrap();
        assert_eq!(plan.config.m, 1000);
        assert_eq!(plan.targets, [Target::WalkLaw]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse(r#"{"regime": "moderate", "theta": 1, "n": 1000, "targets": [], "colour": 1}"#).is_err());
        let bad_tol = r#"{"regime": "moderate", "theta": 1, "n": 1000, "targets": [], "tolerances": {"zz": 1}}"#;
        assert!(parse(bad_tol).is_err());
    }

    #[test]
    fn shape_keys_match_regime() {
        let light = r#"{"regime": "light", "n": 100, "m_or_aspect": {"aspect": 2.0}, "targets": ["TriangleLight"]}"#;
        assert_eq!(parse(light).unwrap().into_plan().unwrap().config.m, 10_000);
        let heavy = r#"{"regime": "heavy", "n": 1000, "m_or_aspect": {"m": 50}, "targets": []}"#;
        assert_eq!(parse(heavy).unwrap().into_plan().unwrap().config.m, 50);
        let mixed = r#"{"regime": "light", "n": 100, "theta": 2, "targets": []}"#;
        assert!(parse(mixed).unwrap().into_plan().is_err());
        let wrong_target = r#"{"regime": "moderate", "theta": 1, "n": 100, "targets": ["TriangleHeavy"]}"#;
        assert!(parse(wrong_target).unwrap().into_plan().is_err());
    }
}

//! Small campaigns end to end: files on disk, determinism, failure handling.

use rig_core::campaigns::{run_campaign, run_target, ExperimentPlan, Target};
use rig_core::validation::StatReport;
use rig_core::{build_config, Regime, Shape};

fn smoke(dir: &std::path::Path) -> ExperimentPlan {
    let config = build_config(Regime::Moderate, 0.0, Shape::Theta(1.0), 1000).unwrap();
    let mut plan = ExperimentPlan::new(config).with_targets(&[Target::WalkLaw, Target::TriangleModerate]);
    plan.name = "smoke".into();
    plan.replicates = 40;
    plan.seed = 7;
    plan.continuum_paths = 40;
    plan.dt = 1e-2;
    plan.output_dir = Some(dir.to_path_buf());
    plan
}

#[test]
fn writes_one_file_pair_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_campaign(&smoke(dir.path())).unwrap();
    let out = dir.path().join("smoke");
    for stem in ["walk_law", "triangle_moderate"] {
        let jsonl = std::fs::read_to_string(out.join(format!("{stem}.jsonl"))).unwrap();
        let reports: Vec<StatReport> = jsonl.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert!(!reports.is_empty());
        assert!(reports.iter().filter(|r| r.name.contains(".ks")).all(|r| r.stderr.is_nan()));
        let csv = std::fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        assert!(csv.lines().count() > 1);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("campaign.json")).unwrap()).unwrap();
    assert_eq!(summary["name"], "smoke");
    assert_eq!(summary["targets"].as_array().unwrap().len(), 2);
    assert!(res.report("walk_law.S.mean@1").is_some());
    assert!(res.targets.iter().all(|t| t.error.is_none()));
}

#[test]
fn reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let plan = smoke(dir.path());
    let a = run_target(&plan, Target::WalkLaw).unwrap();
    let b = run_target(&plan, Target::WalkLaw).unwrap();
    let json = |r: &[StatReport]| serde_json::to_string(r).unwrap();
    assert_eq!(json(&a.reports), json(&b.reports));
    assert_eq!(a.csv, b.csv);
    let mut other = plan.clone();
    other.seed += 1;
    assert_ne!(json(&run_target(&other, Target::WalkLaw).unwrap().reports), json(&a.reports));
}

#[test]
fn zero_tolerance_fails_but_completes() {
    let dir = tempfile::tempdir().unwrap();
    let mut plan = smoke(dir.path());
    plan.tolerances.z = 0.0;
    plan.tolerances.triangle_rel = Some(0.0);
    let res = run_campaign(&plan).unwrap();
    assert!(!res.pass());
    assert_eq!(res.targets.len(), 2);
    assert!(dir.path().join("smoke").join("campaign.json").exists());
}

#[test]
fn unsupported_target_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let plan = smoke(dir.path()).with_targets(&[Target::TriangleHeavy]);
    assert!(plan.validate().is_err());
    assert!(run_campaign(&plan).is_err());
}

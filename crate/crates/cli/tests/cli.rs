//! Runs the `rig` binary and checks outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn rig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rig")).args(args).env_remove("RIG_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// The ten-individual example with communities
/// {0,1,4} {0,4,5} {1,2,3,4} {6,7} {7,8} {7,8,9} and one empty one.
fn write_figure(path: &Path) {
    let communities: [&[u32]; 7] = [&[0, 1, 4], &[0, 5, 4], &[1, 2, 3, 4], &[6, 7], &[7, 8], &[7, 9, 8], &[]];
    let mut text = String::from("10 7 0\n");
    for (u, members) in communities.iter().enumerate() {
        for v in *members {
            text.push_str(&format!("{v} {u}\n"));
        }
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn sample_is_deterministic() {
    let args = ["sample", "--regime", "moderate", "--n", "2000", "--lambda", "-0.5", "--seed", "11"];
    let a = rig(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&rig(&args)));
    let line = stdout(&a);
    assert!(line.starts_with("regime=moderate n=2000 m=2000 "), "{line}");
    assert_ne!(line, stdout(&rig(&["sample", "--regime", "moderate", "--n", "2000", "--lambda", "-0.5", "--seed", "12"])));
}

#[test]
fn sample_dump_feeds_explore() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("g.txt");
    let trace = dir.path().join("t.csv");
    let s = rig(&["sample", "--regime", "light", "--aspect", "1.5", "--n", "300", "--seed", "3", "--dump-graph", p(&dump)]);
    assert!(s.status.success());
    let e = rig(&["explore", "--graph", p(&dump), "--trace-csv", p(&trace)]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    assert!(stdout(&e).contains("300 steps checked, 0 violations"));
}

#[test]
fn bad_model_arguments_are_usage_errors() {
    assert_eq!(rig(&["sample", "--regime", "moderate", "--n", "0"]).status.code(), Some(2));
    assert_eq!(rig(&["sample", "--regime", "moderate", "--n", "100", "--theta", "-1"]).status.code(), Some(2));
    assert_eq!(rig(&["sample", "--regime", "light", "--n", "100", "--m", "50"]).status.code(), Some(2));
    assert_eq!(rig(&["sample", "--n", "100"]).status.code(), Some(2));
    assert_eq!(rig(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn explore_figure_graph() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("figure.txt");
    write_figure(&dump);
    let run = |tag: &str| {
        let trace = dir.path().join(format!("trace{tag}.csv"));
        let surplus = dir.path().join(format!("surplus{tag}.csv"));
        let comps = dir.path().join(format!("comps{tag}.csv"));
        let o = rig(&[
            "explore",
            "--graph",
            p(&dump),
            "--root-rule",
            "smallest",
            "--trace-csv",
            p(&trace),
            "--surplus-csv",
            p(&surplus),
            "--components-csv",
            p(&comps),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("audit: 10 steps checked, 0 violations, 2 components"), "{}", stdout(&o));
        let read = |f| std::fs::read_to_string(f).unwrap();
        (read(&trace), read(&surplus), read(&comps))
    };
    let (trace, surplus, comps) = run("a");
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "k,X,dS,S,H,comp");
    assert_eq!(lines[1], "1,2,2,2,1,1");
    assert_eq!(lines[10], "10,0,-1,-2,3,2");
    assert_eq!(surplus.lines().next(), Some("k,l,case,u,w"));
    assert_eq!(comps.lines().count(), 3);
    assert_eq!(run("b"), (trace, surplus, comps));
}

#[test]
fn missing_graph_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rig(&["explore", "--graph", "/nonexistent/g.txt", "--trace-csv", p(&dir.path().join("t.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "10 7\n").unwrap();
    let o = rig(&["explore", "--graph", p(&bad), "--trace-csv", p(&dir.path().join("t.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_plan(dir: &Path, extra: &str) -> std::path::PathBuf {
    let plan = dir.join("plan.json");
    let out = dir.join("out");
    let text = format!(
        r#"{{"name": "smoke", "regime": "moderate", "theta": 1.0, "n": 1000, "replicates": 40, "seed": 5,
            "targets": ["WalkLaw"], "dt": 0.01, "continuum_paths": 40, "output_dir": {:?}{extra}}}"#,
        p(&out)
    );
    std::fs::write(&plan, text).unwrap();
    plan
}

#[test]
fn campaign_smoke_passes() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "");
    let o = rig(&["campaign", p(&plan)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("out/smoke/walk_law.jsonl").exists());
    assert!(dir.path().join("out/smoke/campaign.json").exists());
}

#[test]
fn campaign_failures_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), r#", "tolerances": {"z": 0.0, "ks": 0.0}"#);
    assert_eq!(rig(&["campaign", p(&plan)]).status.code(), Some(3));
    let plan = write_plan(dir.path(), r#", "colour": "red""#);
    assert_eq!(rig(&["campaign", p(&plan)]).status.code(), Some(2));
    assert_eq!(rig(&["campaign", "/nonexistent/plan.json"]).status.code(), Some(2));
}

#[test]
fn limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("limits");
    let o = rig(&[
        "limits", "--theta", "2", "--lambda", "0.5", "--T", "8", "--dt", "0.002", "--seed", "4", "--out", p(&out), "--ghp",
    ]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let path = std::fs::read_to_string(out.join("path.csv")).unwrap();
    let mut rows = path.lines();
    assert_eq!(rows.next(), Some("t,S,R,H"));
    let first: Vec<f64> = rows.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[..2], [0.0, 0.0]);
    let exc = std::fs::read_to_string(out.join("excursions.csv")).unwrap();
    let zetas: Vec<f64> = exc.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(zetas.windows(2).all(|w| w[0] >= w[1]));
    let ghp: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("ghp.json")).unwrap()).unwrap();
    assert_eq!(ghp.as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(out.join("shortcuts.csv")).unwrap().starts_with("k,s,t"));
}

#[test]
fn limits_kappa_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = rig(&[
        "limits", "--theta", "3", "--T", "2", "--dt", "0.01", "--out", p(&out), "--kappa-replicates", "300", "--seed", "9",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(out.join("kappa.json").exists());
    let o = rig(&["limits", "--inf", "--out", p(&out), "--kappa-replicates", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

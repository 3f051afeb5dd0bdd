use std::path::{Path, PathBuf};
use std::process::Command;

use plateau_cli::report::{ExperimentReport, Stage};
use plateau_cli::run::{run, Overrides};
use plateau_cli::scenario::Scenario;
use plateau_core::{DensityTable, Face, FaceComplex, GridDomain, SpanStatus};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn plateau() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plateau"))
}

fn run_file(name: &str, out: &Path, ov: Overrides) -> ExperimentReport {
    let (s, base) = Scenario::load(&scenario(name)).unwrap();
    run(s, &base, &Overrides { out: Some(out.to_path_buf()), ..ov }).unwrap()
}

fn without_clock(mut r: ExperimentReport) -> String {
    r.wall_clock_ms = 0;
    r.to_json()
}

#[test]
fn replay_is_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    for name in ["hopf-links.json", "moebius.json"] {
        let a = run_file(name, &t.path().join("a"), Overrides::default());
        let b = run_file(name, &t.path().join("b"), Overrides::default());
        assert_eq!(without_clock(a), without_clock(b), "{name}");
        let obj = |d: &str| std::fs::read(t.path().join(d).join("moebius.obj")).ok();
        assert_eq!(obj("a"), obj("b"));
    }
}

#[test]
fn replay_ignores_thread_count() {
    let t = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for n in ["1", "3"] {
        let out = t.path().join(n);
        let st = plateau()
            .env("PLATEAU_THREADS", n)
            .args(["run", scenario("moebius.json").to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(st.status.success());
        let r = ExperimentReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        reports.push(without_clock(r));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn emitted_report_round_trips() {
    let t = tempfile::tempdir().unwrap();
    let r = run_file("moebius.json", t.path(), Overrides::default());
    let text = std::fs::read_to_string(t.path().join("report.json")).unwrap();
    let back = ExperimentReport::from_json(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.to_json(), text);
}

#[test]
fn hopf_links_table() {
    let t = tempfile::tempdir().unwrap();
    let r = run_file("hopf-links.json", t.path(), Overrides::default());
    let want = [("hopf", 1), ("split", 0), ("torus-2-4", 2)];
    for (sys, (label, l)) in r.systems.iter().zip(want) {
        assert_eq!(sys.label, label);
        let Stage::LinkTable { rows } = &sys.stages[0] else { panic!("expected link table") };
        assert_eq!(rows[0].linking.abs(), l);
        assert!((rows[0].gauss - rows[0].linking as f64).abs() < 1e-4);
        assert!(rows[0].along.iter().all(|x| *x == Some(rows[0].linking)));
    }
}

#[test]
fn moebius_verdict_pair() {
    let t = tempfile::tempdir().unwrap();
    let r = run_file("moebius.json", t.path(), Overrides::default());
    let verdicts: Vec<(i64, SpanStatus)> = r.systems[0]
        .stages
        .iter()
        .filter_map(|s| match s {
            Stage::Certify { ell, status, .. } => Some((*ell, *status)),
            _ => None,
        })
        .collect();
    assert_eq!(verdicts, vec![(1, SpanStatus::Spans), (2, SpanStatus::NotSpanning)]);
    assert!(r.certified);
}

#[test]
fn fig1_three_regimes() {
    let t = tempfile::tempdir().unwrap();
    let r = run_file("fig1.json", t.path(), Overrides::default());
    let blocks: Vec<Vec<Vec<usize>>> = r
        .systems
        .iter()
        .map(|s| match &s.stages[0] {
            Stage::Minimize { topology, bracket_holds, .. } => {
                assert!(bracket_holds);
                topology.blocks.clone()
            }
            _ => panic!("expected minimize"),
        })
        .collect();
    assert_eq!(blocks, vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]], vec![vec![0], vec![1, 2]]]);
    assert!(r.certified);
    assert!(t.path().join("gaps-0p3-1p5.obj").is_file());
}

#[test]
fn ell_override_replaces_the_list() {
    let t = tempfile::tempdir().unwrap();
    let r = run_file("moebius.json", t.path(), Overrides { ell: Some(2), ..Default::default() });
    let certs: Vec<_> = r.systems[0].stages.iter().filter(|s| matches!(s, Stage::Certify { .. })).collect();
    assert_eq!(certs.len(), 1);
    assert!(matches!(certs[0], Stage::Certify { ell: 2, status: SpanStatus::NotSpanning, expected: None, .. }));
}

#[test]
fn failed_expectation_exits_2() {
    let t = tempfile::tempdir().unwrap();
    let mut s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario("moebius.json")).unwrap()).unwrap();
    s["pipeline"][1]["expect"] = serde_json::json!(["NotSpanning", "NotSpanning"]);
    let f = t.path().join("wrong.json");
    std::fs::write(&f, s.to_string()).unwrap();
    let o = plateau().args(["run", f.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "certification");
    assert!(t.path().join("out/moebius/report.json").is_file());
}

#[test]
fn schema_errors_exit_3() {
    let t = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_field.json", r#"{"name":"x","seed":1,"grid":{"h":0.1},"systems":[],"pipeline":[],"extra":1}"#),
        ("no_seed.json", r#"{"name":"x","grid":{"h":0.1},"systems":[],"pipeline":[]}"#),
        (
            "no_surface.json",
            r#"{"name":"x","seed":1,"grid":{"h":0.1},"systems":[{"label":"a","boundary":[{"kind":"circle","center":[0,0,0],"axis":[0,0,1],"radius":1,"sides":8}]}],"pipeline":[{"op":"haircut"}]}"#,
        ),
        (
            "missing_file.json",
            r#"{"name":"x","seed":1,"grid":{"h":0.1},"systems":[{"label":"a","boundary":[{"kind":"vertex_file","path":"nope.txt"}]}],"pipeline":[{"op":"link_table"}]}"#,
        ),
    ];
    for (name, body) in cases {
        let f = t.path().join(name);
        std::fs::write(&f, body).unwrap();
        let o = plateau().args(["run", f.to_str().unwrap()]).output().unwrap();
        assert_eq!(o.status.code(), Some(3), "{name}");
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["exit_code"], 3);
    }
}

#[test]
fn vertex_file_loops_resolve_relative_to_scenario() {
    let t = tempfile::tempdir().unwrap();
    std::fs::write(t.path().join("tri.txt"), "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let body = r#"{"name":"vf","seed":1,"grid":{"h":0.125},"systems":[{"label":"a","boundary":[{"kind":"vertex_file","path":"tri.txt"}]}],"pipeline":[{"op":"cone"},{"op":"certify","ell":[1],"expect":["Spans"]}]}"#;
    let f = t.path().join("vf.json");
    std::fs::write(&f, body).unwrap();
    let o = plateau().args(["run", f.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn export_one_face_obj() {
    let t = tempfile::tempdir().unwrap();
    let d = GridDomain::new([0.0; 3], 0.5, [2, 2, 2]).unwrap();
    let x = FaceComplex::from_faces(d, [Face::new(0, [1, 0, 0])]).unwrap();
    let f = t.path().join("face.json");
    std::fs::write(&f, serde_json::to_string(&x).unwrap()).unwrap();
    let o = plateau().args(["export", f.to_str().unwrap(), "--format", "obj"]).output().unwrap();
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 4);
    assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 1);
    assert!(s.contains("v 0.5 0 0\n"));
}

#[test]
fn export_hopf_polylines() {
    let o = plateau().args(["export", "fixture:hopf", "--format", "obj"]).output().unwrap();
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(s.lines().filter(|l| l.starts_with("o ")).count(), 2);
    assert_eq!(s.lines().filter(|l| l.starts_with("l ")).count(), 2);
}

#[test]
fn export_density_csv_header() {
    let t = tempfile::tempdir().unwrap();
    let f = t.path().join("density.json");
    std::fs::write(&f, serde_json::to_string(&DensityTable::default()).unwrap()).unwrap();
    let out = t.path().join("d.csv");
    let st = plateau()
        .args(["export", f.to_str().unwrap(), "--format", "csv", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "p_x,p_y,p_z,r,ratio\n");
}

#[test]
fn export_is_deterministic_and_rejects_unknown_formats() {
    let run = |fmt: &str| plateau().args(["export", "fixture:unit-disk", "--format", fmt]).output().unwrap();
    assert_eq!(run("off").stdout, run("off").stdout);
    let bad = run("stl");
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn identities_pass_on_seed_42() {
    let o = plateau().args(["identities", "--seed", "42"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(!s.contains("FAIL"));
}

#[test]
fn identities_selector() {
    let o = plateau().args(["identities", "--suite", "stokes"]).output().unwrap();
    let s = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = s.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.starts_with("stokes")));
}

#[test]
fn corrupted_operator_reports_witness() {
    let o = plateau().args(["identities", "--corrupt"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let s = String::from_utf8(o.stdout).unwrap();
    let witness: serde_json::Value = s
        .lines()
        .find(|l| l.starts_with('{'))
        .map(|l| serde_json::from_str(l).unwrap())
        .expect("failing check serialized");
    assert!(witness["failures"].as_u64().unwrap() > 0);
    assert_eq!(witness["witness"]["kind"], "jet");
    assert!(witness["witness"]["chain"]["elements"].as_array().is_some_and(|e| !e.is_empty()));
}

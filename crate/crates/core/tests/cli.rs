use std::path::Path;
use std::process::{Command, Output};

use chainlock::cli::obj_vertices;
use chainlock::scene::Scene;

fn chainlock(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainlock")).args(args).current_dir(dir).output().expect("binary runs")
}

fn generate_full(dir: &Path) {
    let out = chainlock(&["generate", "--kind", "full", "--epsilon", "0.01", "--out", "full.json"], dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_and_check_every_kind() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["tangle", "ten-chain", "full", "control-two-vs-four", "control-three-vs-three"] {
        let out = chainlock(&["generate", "--kind", kind, "--out", "s.json"], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{kind}");
        let out = chainlock(&["check", "--scene", "s.json", "--report", "r.json"], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{kind}: {}", String::from_utf8_lossy(&out.stdout));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().all(|l| l.contains(": PASS ")));
        assert!(tmp.path().join("r.json").exists());
    }
}

#[test]
fn infeasible_generation_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = chainlock(&["generate", "--kind", "full", "--leg", "0.5", "--out", "s.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("s.json").exists());
    let out = chainlock(&["generate", "--kind", "ten-chain", "--epsilon", "0.6", "--out", "s.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("s.json").exists());
}

#[test]
fn check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    generate_full(tmp.path());
    let out = chainlock(&["mutate", "--scene", "full.json", "--kind", "straighten-jag-z", "--out", "m.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let out = chainlock(&["check", "--scene", "m.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("jag_z: FAIL"));

    std::fs::write(tmp.path().join("bad.json"), "{").unwrap();
    assert_eq!(chainlock(&["check", "--scene", "bad.json"], tmp.path()).status.code(), Some(2));
    assert_eq!(chainlock(&["check", "--scene", "missing.json"], tmp.path()).status.code(), Some(2));
}

#[test]
fn unlock_csv() {
    let tmp = tempfile::tempdir().unwrap();
    generate_full(tmp.path());
    let out = chainlock(&["unlock", "--scene", "full.json", "--seeds", "0", "--budget", "10", "--step", "1e-4"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "seed,separated,iterations,best_separation\n");

    let args = ["unlock", "--scene", "full.json", "--seeds", "3", "--budget", "200", "--step", "1e-4", "--first-seed", "5", "--out", "u.csv"];
    assert_eq!(chainlock(&args, tmp.path()).status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("u.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], (5 + i).to_string());
        assert_eq!(f[1], "false");
        assert_eq!(f[2], "200");
        assert!(f[3].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(chainlock(&args, tmp.path()).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(tmp.path().join("u.csv")).unwrap(), csv);
}

#[test]
fn unlock_control_writes_witness() {
    let tmp = tempfile::tempdir().unwrap();
    chainlock(&["generate", "--kind", "control-two-vs-four", "--out", "c.json"], tmp.path());
    let args = ["unlock", "--scene", "c.json", "--seeds", "1", "--budget", "100000", "--step", "0.01", "--witness-out", "w.json"];
    let out = chainlock(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains(",true,"));
    assert!(tmp.path().join("w.json").exists());
}

#[test]
fn sweep_validation_and_output() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in ["0.01,0.02", "0.01,0.01", "-0.01"] {
        let out = chainlock(&["sweep", "--epsilons", bad, "--samples", "10", "--out", "s.csv"], tmp.path());
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
    let out = chainlock(&["sweep", "--samples", "10", "--out", "s.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("s.csv").exists());

    let out = chainlock(&["sweep", "--epsilons", "0.02,0.01,0.005", "--samples", "100", "--seed", "3", "--out", "s.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,observed_min,observed_max,lo,hi,feasible"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let v: Vec<f64> = r[..5].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[3] <= v[1] && v[1] <= v[2] && v[2] <= v[4]);
        assert_eq!(r[5], "true");
    }
}

#[test]
fn export_obj_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    generate_full(tmp.path());
    let out = chainlock(&["export", "--scene", "full.json", "--format", "obj", "--out", "full.obj"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let obj = std::fs::read_to_string(tmp.path().join("full.obj")).unwrap();
    assert!(obj.starts_with('#'));
    assert_eq!(obj.lines().filter(|l| l.starts_with("o ")).count(), 2);
    assert_eq!(obj.lines().filter(|l| l.starts_with("l ")).count(), 12);
    let scene: Scene = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("full.json")).unwrap()).unwrap();
    let verts = obj_vertices(&obj).unwrap();
    let joints: Vec<_> = scene.chains.iter().flat_map(|c| c.joints.iter().copied()).collect();
    assert_eq!(verts.len(), joints.len());
    for (a, b) in verts.iter().zip(&joints) {
        assert!((*a - *b).norm() <= 1e-10);
    }

    let out = chainlock(&["export", "--scene", "full.json", "--format", "ply", "--out", "full.ply"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("full.ply").exists());
}

#[test]
fn usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(chainlock(&[], tmp.path()).status.code(), Some(2));
    assert_eq!(chainlock(&["generate", "--kind", "square", "--out", "x"], tmp.path()).status.code(), Some(2));
    assert_eq!(chainlock(&["--help"], tmp.path()).status.code(), Some(0));
}

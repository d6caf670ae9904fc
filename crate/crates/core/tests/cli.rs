use std::path::Path;
use std::process::{Command, Output};

fn nashq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nashq")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ZERO: &str = r#"{"version": 1, "environment": {"canonical": {"name": "zero", "gamma": [0.9, 0.9]}},
  "learners": ["partial_info", "partial_info"], "horizon": {"steps": 100}}"#;

const RANDOM: &str = r#"{"version": 1, "environment": {"random_game": {"seed": 1}},
  "learners": ["partial_info", "partial_info"], "schedule": {"kind": "global_stair", "width": 250},
  "horizon": {"steps": 4000}, "seed": 1}"#;

#[test]
fn run_prints_one_line_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("zero.json"), ZERO).unwrap();
    let o = nashq(&["run", "zero.json", "--require-pass"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).contains("certified"));
    assert!(dir.path().join("zero-out/certificate.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("random.json"), RANDOM).unwrap();
    std::fs::write(p.join("bad_gamma.json"), ZERO.replace("[0.9, 0.9]", "[1.2, 0.9]")).unwrap();
    std::fs::write(p.join("typo.json"), ZERO.replace("\"horizon\"", "\"horizn\"")).unwrap();

    let o = nashq(&["run", "bad_gamma.json"], p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("environment.canonical.gamma"), "{}", stderr(&o));

    let o = nashq(&["run", "typo.json"], p);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let o = nashq(&["run", "missing.json"], p);
    assert_eq!(o.status.code(), Some(2));

    // a short stair run on the random game is not an equilibrium at 0.05
    let o = nashq(&["run", "random.json", "--out", "r"], p);
    assert_eq!(o.status.code(), Some(0));
    let o = nashq(&["run", "random.json", "--out", "r", "--require-pass"], p);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
}

#[test]
fn gen_game_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("spec.json"), r#"{"d1": 2, "d2": 3, "d_s": 3, "seed": 4}"#).unwrap();
    let o = nashq(&["gen-game", "spec.json", "-o", "game.json"], p);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::write(
        p.join("run.json"),
        r#"{"version": 1, "environment": {"json": {"path": "game.json"}},
            "learners": ["partial_info", "partial_info"], "horizon": {"steps": 2000}}"#,
    )
    .unwrap();
    assert_eq!(nashq(&["run", "run.json", "--out", "out"], p).status.code(), Some(0));

    let o = nashq(&["verify", "out/tables.json", "game.json", "--tol", "1000", "--require-pass", "--out", "cert.json"], p);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("cert.json")).unwrap()).unwrap();
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("out/certificate.json")).unwrap()).unwrap();
    assert_eq!(saved["certificate"]["gap_1"], run["certificate"]["gap_1"]);

    assert!(saved["certificate"]["gap_1"].as_f64().unwrap().max(saved["certificate"]["gap_2"].as_f64().unwrap()) > 0.0);
    let o = nashq(&["verify", "out/tables.json", "game.json", "--tol", "0", "--require-pass"], p);
    assert_eq!(o.status.code(), Some(4), "{}", stdout(&o));
    let o = nashq(&["verify", "out/tables.json", "game.json", "--tol", "-1"], p);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(p.join("bad_spec.json"), r#"{"d1": 2, "gamma_1": 2.0}"#).unwrap();
    assert_eq!(nashq(&["gen-game", "bad_spec.json", "-o", "x.json"], p).status.code(), Some(2));
}

#[test]
fn compare_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("a.json"), ZERO).unwrap();
    std::fs::write(p.join("b.json"), ZERO.replace(r#"["partial_info", "partial_info"]"#, r#"["random", "random"]"#)).unwrap();
    let o = nashq(&["compare", "a.json", "b.json", "--seeds", "2", "--out", "cmp"], p);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(p.join("cmp/comparison.csv")).unwrap();
    let labels: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["a", "b"]);
}

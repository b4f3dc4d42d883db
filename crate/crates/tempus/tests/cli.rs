use std::path::Path;
use std::process::{Command, Output};

fn tempus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempus"))
        .args(args)
        .env_remove("TEMPUS_THREADS")
        .output()
        .expect("spawn tempus")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn classify_reports_four_systems() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = tempus(&["classify", "--csv", path(&csv)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = read(&csv);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# tempus "));
    assert!(lines.next().unwrap().starts_with("system,"));
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("c.csv.manifest.json").exists());
}

#[test]
fn missing_required_parameter_exits_2() {
    let out = tempus(&["measure", "--mode", "axis"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));
    let out = tempus(&["wigner", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mode": "axis", "eps": "0.01:0.1:3", "bogus": 1}"#).unwrap();
    let out = tempus(&["measure", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = [
        "measure",
        "--mode",
        "axis",
        "--eps",
        "0.02:0.2:4",
        "--n",
        "400000",
        "--seed",
        "7",
    ];
    for (p, threads) in [(&a, "1"), (&b, "3")] {
        let mut v = args.to_vec();
        v.extend(["--threads", threads, "--csv", path(p)]);
        assert!(tempus(&v).status.success());
    }
    assert_eq!(read(&a), read(&b));
}

#[test]
fn thread_count_env_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let base = [
        "schulman", "--na", "60", "--nb", "20", "--runs", "4", "--steps", "2000",
    ];
    let mut v = base.to_vec();
    v.extend(["--threads", "1", "--csv", path(&a)]);
    assert!(tempus(&v).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_tempus"))
        .args(base)
        .args(["--csv", path(&b)])
        .env("TEMPUS_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read(&a), read(&b));
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let out = tempus(&[
        "cosmo",
        "--phi",
        "0.3",
        "--phidot",
        "0.2",
        "--csv",
        path(&a),
    ]);
    assert!(out.status.success());
    let manifest = dir.path().join("a.csv.manifest.json");
    let out = tempus(&["cosmo", "--config", path(&manifest), "--csv", path(&b)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(read(&a), read(&b));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kernel": "lorentzian", "gamma": 0.3, "nt": 11}"#).unwrap();
    let json = dir.path().join("r.json");
    let out = tempus(&[
        "deco",
        "--config",
        path(&cfg),
        "--gamma",
        "0.5",
        "--json",
        path(&json),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("r.json.manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["gamma"], 0.5);
    assert_eq!(manifest["config"]["nt"], 11);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("# manifest sha256="));
}

#[test]
fn branch_answers_queries_on_the_reference_graph() {
    let out = tempus(&["branch"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("global_arrow"));
    assert!(stdout.contains("0 violations"));
}

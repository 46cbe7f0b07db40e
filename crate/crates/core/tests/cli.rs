use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use interbank::manifest::{RunManifest, MANIFEST_FILE};

const TINY: &str = "[env]\nhorizon = 40\n\
[ppo]\nepisodes = 2\neval_interval = 1\ninstances = 2\neval_episodes = 2\n\
[experiment]\nreplicas = 3\nseed = 5\n";

fn interbank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interbank"))
        .current_dir(dir)
        .args(args)
        .env_remove("INTERBANK__ENV__HORIZON")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = interbank(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    dir
}

fn lines(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = setup();
    fs::write(dir.path().join("bad.toml"), "[market]\nfire_sale_pricee = 0.3\n").unwrap();
    let out = interbank(dir.path(), &["--config", "bad.toml", "simulate", "--strategy", "random", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fire_sale_pricee"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn bad_strategy_exits_2_and_missing_checkpoint_exits_4() {
    let dir = setup();
    let out = interbank(dir.path(), &["--config", "tiny.toml", "simulate", "--strategy", "fixed9", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let out = interbank(dir.path(), &["--config", "tiny.toml", "simulate", "--strategy", "checkpoint:nope.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_is_deterministic_and_hashed() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["--config", "tiny.toml", "simulate", "--strategy", "random", "--out", "a"]);
    ok(d, &["--config", "tiny.toml", "--jobs", "1", "simulate", "--strategy", "random", "--out", "b"]);
    let m = RunManifest::load(&d.join("a/random").join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.seeds, vec![5, 6, 7]);
    assert!(m.verify(&d.join("a/random")).is_empty());
    for f in &m.files {
        let a = fs::read(d.join("a/random").join(&f.path)).unwrap();
        let b = fs::read(d.join("b/random").join(&f.path)).unwrap();
        assert_eq!(a, b, "{} differs across thread counts", f.path);
    }
    assert_eq!(lines(&d.join("a/random/replica_000/trace.csv")), 41);
    assert_eq!(lines(&d.join("a/random/aggregate.csv")), 41);
    assert_eq!(lines(&d.join("a/random/summary.csv")), 4);
}

#[test]
fn environment_overrides_config() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_interbank"))
        .current_dir(dir.path())
        .args(["--config", "tiny.toml", "simulate", "--strategy", "fixed1", "--replicas", "1", "--out", "o"])
        .env("INTERBANK__ENV__HORIZON", "25")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(lines(&dir.path().join("o/fixed1/replica_000/trace.csv")), 26);
}

#[test]
fn train_evaluate_explain() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["--config", "tiny.toml", "train", "--out", "t"]);
    for f in ["instance_0.json", "instance_1.json", "best.json", "learning_curve.csv"] {
        assert!(d.join("t").join(f).exists(), "{f}");
    }
    let m = RunManifest::load(&d.join("t").join(MANIFEST_FILE)).unwrap();
    assert!(m.best_instance.is_some());
    let best: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("t/best.json")).unwrap()).unwrap();
    let ck = format!("t/{}", best["checkpoint"].as_str().unwrap());

    ok(d, &["--config", "tiny.toml", "evaluate", "--checkpoint", &ck, "--out", "e"]);
    assert!(lines(&d.join("e/evaluation.csv")) > 1);

    ok(d, &["--config", "tiny.toml", "simulate", "--strategy", "random", "--replicas", "1", "--out", "r"]);
    ok(d, &["explain", "--checkpoint", &ck, "--traces", "r/random", "--samples", "10", "--out", "x"]);
    // Six features, two classes, ten samples.
    assert_eq!(lines(&d.join("x/shap_values.csv")), 1 + 6 * 2 * 10);
    assert_eq!(lines(&d.join("x/shap_ranking.csv")), 1 + 12);
}

#[test]
fn report_without_learned_run() {
    let dir = setup();
    let d = dir.path();
    for s in ["fixed0", "fixed1", "random"] {
        ok(d, &["--config", "tiny.toml", "simulate", "--strategy", s, "--out", "run"]);
    }
    ok(d, &["report", "--run-dir", "run"]);
    let table = fs::read_to_string(d.join("run/report/table.csv")).unwrap();
    let strategies: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(strategies.contains(&"random"));
    assert!(!strategies.contains(&"learned"));
    assert!(!d.join("run/report/ks.csv").exists());
    assert!(lines(&d.join("run/report/regressions.csv")) > 1);

    let empty = tempfile::tempdir().unwrap();
    let out = interbank(empty.path(), &["report", "--run-dir", "."]);
    assert!(!out.status.success());
}

#[test]
fn sweep_rejects_out_of_range_and_writes_grid() {
    let dir = setup();
    let d = dir.path();
    fs::write(
        d.join("sweep.toml"),
        format!("{TINY}rho_grid = [0.1, 0.5]\n"),
    )
    .unwrap();
    ok(d, &["--config", "sweep.toml", "sweep", "--parameter", "rho", "--strategies", "fixed0,fixed1", "--replicas", "2", "--out", "s"]);
    assert_eq!(lines(&d.join("s/sweep_rho.csv")), 1 + 2 * 2);
    let out = interbank(d, &["sweep", "--parameter", "gamma", "--out", "s"]);
    assert_eq!(out.status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use afapprox::docs::{approx_from_json, read_approx};
use afapprox::manifest::Manifest;
use afapprox_core::baselines::mpcformer_gelu;
use serde_json::Value;

fn afapprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afapprox")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small SiLU model trained once for the whole file.
fn toy_model() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    let (_, p) = DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("model");
        let o = afapprox(&[
            "train",
            "--arch",
            "2:8:2",
            "--dataset",
            "blobs",
            "--size",
            "1200",
            "--epochs",
            "10",
            "--seed",
            "7",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let model = out.join("model.json");
        (dir, model)
    });
    p
}

#[test]
fn train_writes_model_and_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["train", "--arch", "2:16:16:2", "--dataset", "rings", "--seed", "7", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let acc: f64 = text
        .lines()
        .find(|l| l.starts_with("test accuracy"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc > 0.5, "{text}");
    let model: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["classes"], 2);
    let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.command, "train");
    assert_eq!(m.seed, Some(7));
}

#[test]
fn gen_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = afapprox(&[
            "gen",
            "--function",
            "silu",
            "--model",
            s(toy_model()),
            "--dataset",
            "blobs",
            "--size",
            "1200",
            "--imax",
            "3",
            "--seed",
            "1",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["approximation.json", "search_report.json", "cost_report.json", "manifest.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read(a.join("approximation.json")).unwrap(), fs::read(b.join("approximation.json")).unwrap());
    let pp = read_approx(&a.join("approximation.json")).unwrap();
    assert_eq!(pp.function(), "silu");

    // the manifest alone replays the run
    let m: Manifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let mut args: Vec<String> = m.args.clone();
    let c = dir.path().join("c");
    args.extend(["--out".into(), s(&c).into()]);
    let o = Command::new(env!("CARGO_BIN_EXE_afapprox")).args(&args).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let replayed: Manifest = serde_json::from_str(&fs::read_to_string(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(replayed.outputs[0].sha256, m.outputs[0].sha256);
}

#[test]
fn impossible_nu_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["gen", "--function", "silu", "--model", s(toy_model()), "--nu", "0", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no feasible candidate"), "{}", stderr(&o));
}

#[test]
fn approx_identity_succeeds_and_lists_probes() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["approx", "--function", "identity", "--m", "2", "--k", "1", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ladder: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("delta_ladder.json")).unwrap()).unwrap();
    let probes = ladder["probes"].as_array().unwrap();
    assert!(!probes.is_empty());
    for p in probes {
        assert!(stdout(&o).contains(&format!("{:.6e}", p["delta"].as_f64().unwrap())));
    }
}

#[test]
fn approx_constant_residual_under_tight_nu_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&[
        "approx",
        "--function",
        "silu",
        "--m",
        "1",
        "--k",
        "0",
        "--nu",
        "1e-9",
        "--model",
        s(toy_model()),
        "--size",
        "1200",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!dir.path().join("approximation.json").exists());
    assert!(dir.path().join("delta_ladder.json").exists());
}

#[test]
fn eval_prints_accuracies_and_fails_on_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["baseline", "--name", "nfgen", "--function", "silu", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let approx = dir.path().join("approximation.json");
    let o = afapprox(&[
        "eval",
        "--approx",
        s(&approx),
        "--model",
        s(toy_model()),
        "--size",
        "1200",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let loss: f64 =
        text.lines().find(|l| l.starts_with("loss")).unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!(loss <= 1e-2, "{text}");
    assert!(text.contains("eta'"));

    let o = afapprox(&[
        "eval",
        "--approx",
        s(&dir.path().join("missing.json")),
        "--model",
        s(toy_model()),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

fn bench_rounds_term(dir: &Path, approx: &Path, rtt: f64) -> f64 {
    let profile = dir.join(format!("p{rtt}.json"));
    fs::write(&profile, format!(r#"{{"rtt": {rtt}}}"#)).unwrap();
    let o = afapprox(&[
        "bench",
        "--approx",
        s(approx),
        "--model",
        s(toy_model()),
        "--size",
        "1200",
        "--profile",
        s(&profile),
        "--out",
        s(dir),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.join("cost_report.json")).unwrap()).unwrap();
    doc["rounds_term"].as_f64().unwrap()
}

#[test]
fn bench_rounds_term_scales_with_rtt_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["baseline", "--name", "relu", "--out", s(dir.path())]);
    assert!(o.status.success());
    let approx = dir.path().join("approximation.json");
    let one = bench_rounds_term(dir.path(), &approx, 0.001);
    let two = bench_rounds_term(dir.path(), &approx, 0.002);
    assert!((two - 2.0 * one).abs() <= 1e-12 * two, "{one} {two}");

    let other = dir.path().join("nfgen");
    assert!(afapprox(&["baseline", "--name", "nfgen", "--out", s(&other)]).status.success());
    let o = afapprox(&[
        "bench",
        "--approx",
        s(&approx),
        "--compare",
        s(&other.join("approximation.json")),
        "--model",
        s(toy_model()),
        "--size",
        "1200",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("time ratio"));
}

#[test]
fn bench_on_empty_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "x0,x1,label\n").unwrap();
    assert!(afapprox(&["baseline", "--name", "relu", "--out", s(dir.path())]).status.success());
    let o = afapprox(&[
        "bench",
        "--approx",
        s(&dir.path().join("approximation.json")),
        "--model",
        s(toy_model()),
        "--dataset",
        s(&csv),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mpcformer_baseline_document() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["baseline", "--name", "mpcformer", "--function", "gelu", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pp = read_approx(&dir.path().join("approximation.json")).unwrap();
    assert_eq!(pp, mpcformer_gelu());
    assert_eq!(pp.eval_real(2.0), 1.5);
}

#[test]
fn unknown_baseline_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = afapprox(&["baseline", "--name", "sirnn", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("minionn"));
}

#[test]
fn export_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    assert!(afapprox(&["baseline", "--name", "minionn", "--function", "silu", "--out", s(&src)]).status.success());
    let out = dir.path().join("out");
    let o = afapprox(&["export", "--approx", s(&src.join("approximation.json")), "--format", "json", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read_to_string(src.join("approximation.json")).unwrap();
    let b = fs::read_to_string(out.join("approximation.json")).unwrap();
    assert_eq!(approx_from_json(&a).unwrap(), approx_from_json(&b).unwrap());
    assert_eq!(a, b);
    let o = afapprox(&["export", "--approx", s(&src.join("approximation.json")), "--format", "yaml", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_sets_flags_and_cli_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"seed": 5, "baseline": {"name": "nfgen", "delta": 0.1}}"#).unwrap();
    let o = afapprox(&["--config", s(&cfg), "baseline", "--delta", "0.001", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pp = read_approx(&dir.path().join("approximation.json")).unwrap();
    assert_eq!(pp.provenance().delta, Some(0.001));
    let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, Some(5));
    assert!(!m.args.iter().any(|a| a.contains("config")));
    assert_eq!(m.inputs.len(), 1);

    fs::write(&cfg, r#"{"sede": 5}"#).unwrap();
    let o = afapprox(&["--config", s(&cfg), "baseline", "--name", "relu", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_flags_exit_one_and_help_exits_zero() {
    assert_eq!(afapprox(&["gen", "--bogus"]).status.code(), Some(1));
    let o = afapprox(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gen"));
}

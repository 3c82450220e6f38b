use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crossex"));
    for k in ["CROSSEX_CAPTURE", "CROSSEX_EVAL_CAPTURE", "CROSSEX_OUT_DIR", "CROSSEX_CHECKPOINT_DIR"] {
        c.env_remove(k);
    }
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// The smoke config with output and checkpoints redirected into `dir`.
fn smoke_config(dir: &Path, extra: &str) -> PathBuf {
    let base = std::fs::read_to_string(configs().join("smoke.toml")).unwrap();
    let text = format!(
        "{base}\n[paths]\nout_dir = {:?}\ncheckpoint_dir = {:?}\n{extra}",
        dir.join("out"),
        dir.join("out/ck")
    );
    let path = dir.join("smoke.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {line}"))
}

#[test]
fn shipped_configs_parse() {
    for name in ["default.toml", "impact.toml", "smoke.toml"] {
        let path = configs().join(name);
        crossex_core_config_check(&path);
    }
}

fn crossex_core_config_check(path: &Path) {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing.ndjson");
    let out = bin()
        .args(["signals", "report", "--config"])
        .arg(path)
        .arg("--out-dir")
        .arg(dir.path())
        .env("CROSSEX_CAPTURE", &bad)
        .output()
        .unwrap();
    let err = error_json(&out);
    assert_eq!(err["error"], "MissingInput", "{}: {err}", path.display());
}

#[test]
fn synth_is_deterministic_and_feeds_capture_tools() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "");
    let a = dir.path().join("a.ndjson");
    let b = dir.path().join("b.ndjson");
    for p in [&a, &b] {
        run(bin().args(["synth", "gen", "--seed", "7", "--config"]).arg(&cfg).arg("--out").arg(p));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert!(!bytes.is_empty());
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest-synth.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"]["market"], 7);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 1);

    let aligned = dir.path().join("aligned.ndjson");
    let out = run(bin().args(["capture", "align"]).arg(&a).arg(&aligned));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["records"].as_u64().unwrap() > 0);

    let csv = dir.path().join("frames.csv");
    let out = run(bin().args(["capture", "resample"]).arg(&aligned).arg(&csv));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let frames = summary["frames"].as_u64().unwrap();
    assert!((11_990..=12_000).contains(&frames), "{frames}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("grid_ts,venue,present,bid1_px"));
    assert_eq!(lines.count() as u64, frames * 3);
}

#[test]
fn signals_report_from_generated_capture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "");
    let cap = dir.path().join("cap.ndjson");
    run(bin().args(["synth", "gen", "--config"]).arg(&cfg).arg("--out").arg(&cap));
    run(bin().args(["signals", "report", "--config"]).arg(&cfg).env("CROSSEX_CAPTURE", &cap));
    let out = dir.path().join("out");
    let r2 = std::fs::read_to_string(out.join("signals_r2.csv")).unwrap();
    // 3 venues x 2 features, 2 cross features, 1 spread feature, 6 horizons.
    assert_eq!(r2.lines().count(), 1 + 9 * 6);
    let reports: Value = serde_json::from_str(&std::fs::read_to_string(out.join("signals_report.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 9);
    assert!(out.join("manifest-signals.json").exists());
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "");
    run(bin().args(["train", "--config"]).arg(&cfg));
    let out = dir.path().join("out");
    assert!(out.join("ck/ppo_single.json").exists());
    assert!(out.join("ck/ppo_cross.json").exists());
    let log = std::fs::read_to_string(out.join("train_cross.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);

    run(bin().args(["evaluate", "--config"]).arg(&cfg));
    let table: Value = serde_json::from_str(&std::fs::read_to_string(out.join("eval_table.json")).unwrap()).unwrap();
    let names: Vec<&str> = table.as_array().unwrap().iter().map(|r| r["policy"].as_str().unwrap()).collect();
    assert_eq!(names, ["TWAP", "PPO_single", "PPO_cross"]);
    assert_eq!(table[0]["Gain_bps"], 0.0);
    for f in ["is_histogram.csv", "heatmap_cross.csv", "heatmap_single.csv", "traces_TWAP.csv", "manifest-evaluate.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn evaluate_without_checkpoints_reports_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "");
    let out = bin().args(["evaluate", "--config"]).arg(&cfg).output().unwrap();
    let err = error_json(&out);
    assert_eq!(err["error"], "MissingInput");
    assert!(err["file"].as_str().unwrap().ends_with("ppo_single.json"));
}

#[test]
fn unknown_config_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "\n[problem]\nvolumes = 3\n");
    let out = bin().args(["train", "--config"]).arg(&cfg).output().unwrap();
    let err = error_json(&out);
    assert_eq!(err["error"], "ConfigParse");
    assert_eq!(err["field"], "volumes");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = bin().args(["train", "--config", "/nonexistent/x.toml"]).output().unwrap();
    let err = error_json(&out);
    assert_eq!(err["error"], "Io");
    assert_eq!(err["file"], "/nonexistent/x.toml");
}

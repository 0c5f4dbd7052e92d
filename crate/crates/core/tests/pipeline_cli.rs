use jlnet::harness::{run_pipeline, PipelineConfig};
use jlnet::models::ModelSet;
use jlnet::{Error, Exec};
use std::path::Path;
use std::process::Command;

const CIRCLE: &str = r#"{
  "model": {"kind": "curve", "dim": 2},
  "function": {"kind": "coordinate", "index": 0},
  "train_count": 400,
  "holdout_count": 200,
  "rho": 0.5,
  "epsilon": 0.5,
  "modulus": {"kind": "holder", "l": 1.0, "alpha": 1.0},
  "dim": 2,
  "jl_retries": 40,
  "seed": 3
}"#;

fn jlnet(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_jlnet"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn small_pipeline_is_deterministic_and_passes() {
    let c = PipelineConfig::from_json(CIRCLE).unwrap();
    let a = run_pipeline(&c, Exec::Sequential).unwrap();
    let b = run_pipeline(&c, Exec::Parallel).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.pass, "{}", a.to_json());
    assert!(a.held_out.max_error <= a.epsilon);
    assert_eq!(a.sizes.increment_matches, Some(true));
    assert!(a.timings.is_none());
}

#[test]
fn oversized_grids_are_refused() {
    let mut c = PipelineConfig::from_json(CIRCLE).unwrap();
    c.grid_cap = 10;
    assert!(matches!(
        run_pipeline(&c, Exec::auto()),
        Err(Error::Refused(_))
    ));
}

#[test]
fn config_rejects_unknown_fields_and_bad_values() {
    let extra = CIRCLE.replacen("\"seed\"", "\"sed\": 1, \"seed\"", 1);
    assert!(PipelineConfig::from_json(&extra).is_err());
    let bad = CIRCLE.replace("\"rho\": 0.5", "\"rho\": 1.5");
    assert!(PipelineConfig::from_json(&bad).is_err());
}

#[test]
fn cli_pipeline_writes_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", CIRCLE);
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    for out in [&out1, &out2] {
        let (code, _, err) = jlnet(&["pipeline", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    let (code, stdout, _) = jlnet(&["pipeline", "--config", &cfg, "--seed", "4"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("\"seed\": 4"));
}

#[test]
fn cli_refusal_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = CIRCLE.replacen("\"seed\": 3", "\"seed\": 3, \"grid_cap\": 10", 1);
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = jlnet(&["pipeline", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("refused"), "{err}");
}

#[test]
fn cli_stage_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = CIRCLE.replace("\"jl_retries\": 40", "\"jl_retries\": 0");
    let cfg = write(dir.path(), "c.json", &text);
    let (code, _, err) = jlnet(&["pipeline", "--config", &cfg, "--seed", "4"]);
    assert_eq!(code, 2);
    assert!(err.contains("stage `embed`"), "{err}");
}

#[test]
fn cli_usage_errors_exit_one() {
    let (code, _, err) = jlnet(&["pipeline"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing --config"), "{err}");
    assert_eq!(jlnet(&["pipeline", "--bogus"]).0, 1);
    assert_eq!(jlnet(&["frobnicate"]).0, 1);
    assert_eq!(jlnet(&["pipeline", "--config", "/nonexistent/c.json"]).0, 1);
    assert_eq!(jlnet(&["--help"]).0, 0);
}

#[test]
fn cli_approximate_constant_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"d": 2, "m": 1.0, "n": 3, "function": {"kind": "constant", "value": 2.5}}"#,
    );
    let (code, stdout, err) = jlnet(&["approximate", "--config", &cfg]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["sup_error"]["max"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["grid_size"], 49);
}

#[test]
fn cli_complexity_csv_and_models_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "sphere", "dim": 3}, "count": 300, "deltas": [1.0, 0.5, 0.25]}"#,
    );
    let (code, stdout, _) = jlnet(&["complexity", "--config", &cfg, "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().next(), Some("delta,count,log_count"));
    assert_eq!(stdout.lines().count(), 4);

    let cfg = write(
        dir.path(),
        "m.json",
        r#"{"model": {"kind": "sparse", "n": 12, "s": 2, "m": 6}, "count": 10, "seed": 2}"#,
    );
    let (code, stdout, _) = jlnet(&["models", "--config", &cfg]);
    assert_eq!(code, 0);
    let set = ModelSet::from_json(&stdout).unwrap();
    assert_eq!(
        (set.model.as_str(), set.samples.len(), set.seed),
        ("sparse", 10, 2)
    );
    assert_eq!(jlnet(&["models", "--config", &cfg, "--format", "csv"]).0, 1);
}

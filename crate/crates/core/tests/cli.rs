use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpon-qkd"))
        .args(args)
        .env_remove("GPON_QKD_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn tables_print_all_cells() {
    let o = cli(&["tables", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 49);
    assert!(text.contains("snr_multiplier,12,12,32,24.04"));
    assert!(text.contains("key_rate_bps,12,2,64,35000"));
}

#[test]
fn snr_from_explicit_terms() {
    let o = cli(&[
        "snr", "-s", "d0=1", "-s", "d1=1", "-s", "d2=1", "-s", "d3=1", "-s", "d4=1", "-s", "q=1", "-s", "n=2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("k = 1.42857143"));
    assert!(stdout(&o).contains("snr_bypass = 0.285714286"));
}

#[test]
fn json_output_is_a_single_document() {
    for cmd in ["snr", "keyrate", "sweep", "calibrate", "tables"] {
        let o = cli(&[cmd, "--format", "json"]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        let v: Result<serde_json::Value, _> = serde_json::from_str(&stdout(&o));
        assert!(v.is_ok(), "{cmd}");
    }
}

#[test]
fn keyrate_point_overrides() {
    let o = cli(&["keyrate", "--format", "json", "-s", "architecture=through"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["rate_bps"], 0.0);
    let o = cli(&["keyrate", "--format", "json", "-s", "eta=0.1", "-s", "y0=1e-5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["rate_bps"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_two() {
    let o = cli(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    let o = cli(&["sweep", "-s", "detector.bogus=1", "-s", "nope=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus") && stderr(&o).contains("nope"));
}

#[test]
fn invalid_config_lists_every_violation() {
    let o = cli(&["sweep", "-s", "ratios=[0]", "-s", "detector.efficiency=2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.lines().count() >= 3, "{err}");
}

#[test]
fn config_from_environment_and_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"fiber_configs":[{"fiber1_km":12,"fiber2_km":2}],"ratios":[32]}"#,
    )
    .unwrap();
    let out = dir.path().join("run.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_gpon-qkd"))
        .args(["sweep", "-o", out.to_str().unwrap()])
        .env("GPON_QKD_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
    assert!(dir.path().join("run.plot.csv").exists());
}

#[test]
fn calibrate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = cli(&["calibrate", "--format", "csv", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 25);
}

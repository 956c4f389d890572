use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_igradeloc"));
    c.env_remove("IGRADELOC_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn defaults() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper-defaults.toml")
}

fn defaults_text() -> String {
    std::fs::read_to_string(defaults()).unwrap()
}

/// Writes `text` to `dir/name`.
fn edited(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn plan_reference_parameters() {
    let o = run(&["plan", "--L", "75", "--S", "1", "--G", "0.1", "--T", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for needle in [
        "83.8525 m -> 84 m",
        "8.85 s -> 10 s",
        "beacon interval p    1 s",
        "maxBeacons           10",
        "fineCntLimit bound   7",
        "theoretical MAE      24.0 m",
        "connected",
    ] {
        assert!(out.contains(needle), "missing `{needle}` in\n{out}");
    }
}

#[test]
fn plan_json_fields() {
    let v = json(&run(&["plan", "--L", "75", "--json"]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["range"]["rounded_m"], 84.0);
    assert_eq!(v["timing"]["centroid_interval_s"], 10.0);
    assert_eq!(v["timing"]["max_beacons"], 10);
    assert_eq!(v["fine_cnt_limit_bound"], 7);
    assert_eq!(v["connected"], true);
    assert!((v["theoretical_mae_m"].as_f64().unwrap() - 23.99).abs() < 0.01);
}

#[test]
fn plan_scales_linearly() {
    let o = run(&["plan", "--L", "150", "--S", "1"]);
    assert!(stdout(&o).contains("theoretical MAE      48.0 m"), "{}", stdout(&o));
    let v = json(&run(&["plan", "--L", "150", "--json"]));
    assert_eq!(v["timing"]["centroid_interval_s"], 20.0);
    assert_eq!(v["timing"]["beacon_interval_s"], 2.0);
}

#[test]
fn exit_codes() {
    let zero = run(&["plan", "--L", "0", "--S", "1"]);
    assert_eq!(zero.status.code(), Some(3), "{}", stderr(&zero));
    let infeasible = run(&["plan", "--L", "75", "--G", "0.3"]);
    assert_eq!(infeasible.status.code(), Some(3));
    assert_eq!(run(&["plan"]).status.code(), Some(2));
    assert_eq!(run(&["plan", "--L", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify-theory", "--L", "75", "--samples", "1000"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["simulate", "/nonexistent/scenario.toml"]).status.code(), Some(4));
}

#[test]
fn simulate_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", defaults().to_str().unwrap(), "--seed", "42", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("trace.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("report.json")).unwrap(),
        std::fs::read(b.join("report.json")).unwrap()
    );

    let text = String::from_utf8(ta).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "time_s,ntl_label,actual_x_m,actual_y_m,est_x_m,est_y_m,method,abs_error_m"
    );
    assert_eq!(text.lines().count(), 1 + 5 * 10_000);

    let report: Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["master_seed"], 42);
    let reports = report["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    for key in ["label", "n_samples", "cle", "mae", "rmse", "within_bound", "fgl_count"] {
        assert!(reports[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let s = defaults();
    let mut csvs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let o = run(&["simulate", s.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        csvs.push(std::fs::read(out.join("trace.csv")).unwrap());
    }
    assert_ne!(csvs[0], csvs[1]);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["simulate", defaults().to_str().unwrap()])
        .env("IGRADELOC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("trace.csv").exists());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = defaults_text()
        .lines()
        .filter(|l| !l.starts_with("qmax_m"))
        .map(|l| format!("{l}\n"))
        .collect();
    let p = edited(dir.path(), "bad.toml", &text);
    let o = run(&["simulate", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("qmax_m"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "bad.toml", &defaults_text().replace("qmin_m", "qmin_meters"));
    let o = run(&["simulate", p.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("qmin_meters"), "{}", stderr(&o));
}

/// The shipped scenario cut down to its first (coarse-grained) NTL.
fn coarse_only_text() -> String {
    let text = defaults_text();
    let second = text.match_indices("[[ntl]]").nth(1).unwrap().0;
    text[..second].to_string()
}

#[test]
fn coarse_only_reports_no_fine_requests() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "cg.toml", &coarse_only_text());
    let out = dir.path().join("out");
    let o = run(&["simulate", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["label"], "CG-NTL");
    assert_eq!(reports[0]["fgl_count"], 0);
}

#[test]
fn verify_theory_reference_point() {
    let v = json(&run(&[
        "verify-theory", "--L", "75", "--R", "83.85", "--samples", "1000000", "--sim-replicates", "2", "--json",
    ]));
    let row = &v["rows"][0];
    assert!((row["theory_mae_m"].as_f64().unwrap() - 23.99).abs() < 0.01);
    assert!(row["monte_carlo_delta"].as_f64().unwrap().abs() < 0.01);
    assert!(row["simulated_cg_mae_m"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_theory_degenerate_range() {
    let v = json(&run(&[
        "verify-theory", "--L", "60", "--R", "60", "--samples", "200000", "--sim-replicates", "0", "--json",
    ]));
    let row = &v["rows"][0];
    assert!((row["theory_mae_m"].as_f64().unwrap() - 20.0).abs() < 1e-9);
    assert!((row["monte_carlo_mae_m"].as_f64().unwrap() - 20.0).abs() < 0.2);
    assert!(row["simulated_cg_mae_m"].is_null());
}

#[test]
fn verify_theory_cell_sweep() {
    let o = run(&[
        "verify-theory", "--L", "25,50,75,100", "--samples", "100000", "--sim-replicates", "0", "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert!((r["theory_mae_over_l"].as_f64().unwrap() - 0.3199).abs() < 1e-4);
    }
    let mismatched = run(&["verify-theory", "--L", "50,75", "--R", "60"]);
    assert_eq!(mismatched.status.code(), Some(2));
}

#[test]
fn sweep_outputs_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(jobs);
        let o = run(&[
            "sweep",
            defaults().to_str().unwrap(),
            "--replicates",
            "3",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("overhead vs FG-NTL"));
        csvs.push(std::fs::read(out.join("sweep.csv")).unwrap());
        let v: Value = serde_json::from_slice(&std::fs::read(out.join("sweep.json")).unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["replicates"], 3);
        assert_eq!(v["rows"].as_array().unwrap().len(), 5);
        assert!(v["improved_vs_fg_overhead"].is_number());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "replicate,ntl_label,n_samples,mae_m,rmse_m,within_10m,fgl_count,overhead_vs_fg"
    );
    assert_eq!(text.lines().count(), 1 + 3 * 5 + 5);
}

#[test]
fn sweep_names_missing_profile() {
    let dir = tempfile::tempdir().unwrap();
    let p = edited(dir.path(), "cg.toml", &coarse_only_text());
    let o = run(&["sweep", p.to_str().unwrap(), "--replicates", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("FG-NTL-Improved"), "{}", stderr(&o));
}

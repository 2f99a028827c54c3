use std::fs;
use std::path::Path;
use std::process::Command;

use fks_core::blowup::ClassifyCriteria;
use fks_core::cli::{self, RunConfig, SweepConfig};
use fks_core::diagnostics::CSV_HEADER;

fn kv(text: &str) -> cli::KeyValues {
    cli::parse_kv(text).unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

const SMALL: &str =
    "scenario = A-sin8\nchi = 5\nn = 128\nt_end = 1\nstride = 0.25\npeak_stride = 0.1";

#[test]
fn simulate_writes_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_kv(&kv(SMALL)).unwrap();
    cfg.out = dir.path().join("run");
    let s = cli::simulate(&cfg).unwrap();
    assert_eq!(s.termination.as_str(), "reached_t_end");
    assert_eq!(s.t_final, 1.0);

    let run = &cfg.out;
    assert_eq!(
        first_line(&run.join("diagnostics.csv")),
        CSV_HEADER.join(",")
    );
    assert_eq!(
        first_line(&run.join("peaks.csv")),
        "track_id,t,x,height,event"
    );
    let mut snaps: Vec<String> = fs::read_dir(run.join("snapshots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    snaps.sort();
    assert_eq!(snaps.first().unwrap(), "t_000000000000.csv");
    assert_eq!(snaps.last().unwrap(), "t_000001000000.csv");
    assert_eq!(snaps.len(), 5);
    let snap = fs::read_to_string(run.join("snapshots").join(&snaps[0])).unwrap();
    assert_eq!(snap.lines().next().unwrap(), "x,u,v");
    assert_eq!(snap.lines().count(), 129);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["termination"], "reached_t_end");
    assert_eq!(meta["version"], fks_core::VERSION);
    assert_eq!(meta["config"]["seed"], "0");
    assert_eq!(meta["config"]["mode"], "explicit");
    assert_eq!(meta["config"]["dealias"], "false");
}

#[test]
fn metadata_reproduces_run_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_kv(&kv(
        "scenario = B-random\nseed = 11\nchi = 8\nn = 128\nt_end = 0.5",
    ))
    .unwrap();
    cfg.out = dir.path().join("a");
    cli::simulate(&cfg).unwrap();

    let mut again = RunConfig::from_metadata(&cfg.out.join("metadata.json")).unwrap();
    assert_eq!(again, cfg);
    again.out = dir.path().join("b");
    cli::simulate(&again).unwrap();
    let a = fs::read(cfg.out.join("diagnostics.csv")).unwrap();
    let b = fs::read(again.out.join("diagnostics.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_records_failures_and_deduplicates() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SMALL}\nt_end = 0.2\nsweep_param = alpha\nsweep_values = 1, -1, 1, 1.5\nout = {}",
        dir.path().join("sw").display()
    )
    .replace("t_end = 1\n", "");
    let sweep = SweepConfig::from_kv(&kv(&text)).unwrap();
    let summary = cli::sweep(&sweep).unwrap();
    assert_eq!(summary.warnings.len(), 1);
    assert_eq!(summary.rows.len(), 3);
    assert!(summary.rows[0].result.is_ok());
    assert!(summary.rows[1].result.is_err());
    assert!(summary.rows[2].result.is_ok());

    let csv = fs::read_to_string(dir.path().join("sw/summary.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0]
        .starts_with("alpha,status,termination,t_final,deviation_inf,peak_count,energy_wiener"));
    assert!(lines[1].starts_with("1.0,ok,reached_t_end"));
    assert!(lines[2].starts_with("-1.0,error"));
    assert!(dir.path().join("sw/alpha_1.5/metadata.json").exists());
}

#[test]
fn fit_recovers_synthetic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let mut text = String::from("t,linf_dxu\n");
    for i in 0..300 {
        let t = 0.1 * i as f64 / 299.0;
        text += &format!("{t:?},{:?}\n", 0.05 * (0.11 - t).powf(-2.0));
    }
    fs::write(&path, text).unwrap();
    let (report, out) = cli::fit(&path, &ClassifyCriteria::default()).unwrap();
    assert_eq!(out, dir.path().join("series.csv.fit.json"));
    assert!((report.a1.unwrap() - 0.05).abs() < 1e-8);
    assert!((report.a2.unwrap() - 0.11).abs() < 1e-10);
    assert!((report.a3.unwrap() - 2.0).abs() < 1e-8);
    assert!(out.exists());
}

#[test]
fn constants_default_report_is_flagged() {
    let report = cli::constants_from_kv(&kv("alpha = 2\nbeta = 2")).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["placeholder_constants"], true);
    assert!(cli::constants_from_kv(&kv("c_se9 = 1")).is_err());
}

fn fks(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fks"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.kv"), "chii = 3\n").unwrap();
    fs::write(d.join("ok.kv"), format!("{SMALL}\n")).unwrap();

    assert_eq!(
        fks(&["simulate", "--config", "bad.kv"], d).status.code(),
        Some(1)
    );
    assert_eq!(
        fks(&["simulate", "--config", "missing.kv"], d)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        fks(&["verify", "--suite", "nonsense"], d).status.code(),
        Some(1)
    );

    let out = fks(
        &[
            "simulate",
            "--config",
            "ok.kv",
            "--out",
            "r",
            "--seed",
            "3",
            "--dealias",
            "--stride",
            "0.5",
        ],
        d,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta = fs::read_to_string(d.join("r/metadata.json")).unwrap();
    assert!(meta.contains("\"dealias\": \"true\"") && meta.contains("\"seed\": \"3\""));
    assert_eq!(fks(&["fit", "r"], d).status.code(), Some(0));
    assert!(d.join("r/fit.json").exists());

    let out = fks(
        &["verify", "--suite", "symbols,constants", "--out", "v.json"],
        d,
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(d.join("v.json").exists());

    // Large data: the decay suite is skipped, which is not a failure.
    fs::write(d.join("big.kv"), "v_modes = 0:0.25,1:3\n").unwrap();
    let out = fks(&["verify", "--suite", "wiener", "--config", "big.kv"], d);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("skipped"));

    fs::write(d.join("p.kv"), "alpha = 2\nbeta = 2\n").unwrap();
    assert_eq!(
        fks(&["constants", "--config", "p.kv"], d).status.code(),
        Some(0)
    );
    assert!(d.join("p.constants.json").exists());
}

#[test]
fn binary_reports_assertion_failures() {
    // A blow-up threshold below the steady value stops the run early.
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("o.kv"), "blowup_threshold = 0.5\n").unwrap();
    let out = fks(
        &["verify", "--suite", "steady", "--config", "o.kv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("steady"));
}

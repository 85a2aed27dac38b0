//! End-to-end tests of the `qcsync` binary: schemas, determinism, exit
//! codes and the config-file/flag precedence.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qcsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcsync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

#[test]
fn budget_reproduces_the_reference_curve() {
    let out = qcsync(&[
        "budget",
        "--f0",
        "0.9",
        "--n-pairs",
        "1e5",
        "--inv-omega-ps",
        "17",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# {"), "config header missing: {header}");
    assert!(header.contains("\"seed\":0"));
    assert_eq!(
        lines.next().unwrap(),
        "n,F_n,pairs_remaining,dt_sql_ps,dt_fidelity_ps,dt_total_ps"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let (min_n, min_dt) = rows
        .iter()
        .map(|r| (r[0] as u32, r[5]))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert_eq!(min_n, 8, "minimum at n = {min_n}");
    assert!((min_dt - 1.5166).abs() < 0.01, "dt* = {min_dt}");
}

#[test]
fn budget_optimize_mode() {
    let out = qcsync(&[
        "budget",
        "--f0",
        "0.9,0.95",
        "--n-pairs",
        "1e4,1e5",
        "--optimize",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().nth(1).unwrap().starts_with("f0,n_pairs,n_star"));
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn twirl_check_residuals_are_tiny() {
    let out = qcsync(&["twirl-check", "--grid", "20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut rows = 0;
    for line in text.lines().skip(2) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[2] < 1e-10, "weight residual {}", cols[2]);
        assert!(cols[3] < 1e-12, "fidelity residual {}", cols[3]);
        rows += 1;
    }
    assert_eq!(rows, 400);
}

#[test]
fn qcs_minimal_m_is_degenerate_but_valid() {
    let out = qcsync(&["qcs", "--m", "1", "--omega", "1", "--t-true", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(2).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let k: u64 = cols[2].parse().unwrap();
    assert!(k <= 1);
    let t_hat: f64 = cols[4].parse().unwrap();
    assert!(t_hat.is_finite());
}

#[test]
fn seeded_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |path: PathBuf| {
        let out = qcsync(&[
            "qcs",
            "--m",
            "1e4",
            "--t-true",
            "0.7",
            "--trials",
            "5",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let a = run(dir.path().join("a.csv"));
    let b = run(dir.path().join("b.csv"));
    assert_eq!(a, b);

    let out = qcsync(&[
        "qcs", "--m", "1e4", "--t-true", "0.7", "--trials", "5", "--seed", "43",
    ]);
    assert_ne!(a, out.stdout, "different seeds must differ");
}

#[test]
fn config_file_is_used_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid": 4, "seed": 9}"#).unwrap();

    let from_file = qcsync(&["twirl-check", "--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success());
    let text = stdout(&from_file);
    assert!(text.lines().next().unwrap().contains("\"grid\":4"));
    assert_eq!(text.lines().count(), 2 + 16);

    let overridden = qcsync(&[
        "twirl-check",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "3",
    ]);
    let text = stdout(&overridden);
    assert!(text.lines().next().unwrap().contains("\"grid\":3"));
    assert_eq!(text.lines().count(), 2 + 9);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"grid": 4, "gird": 5}"#).unwrap();
    let out = qcsync(&["twirl-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    // Unknown flag: clap's usage error.
    let out = qcsync(&["budget", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    // Config error: invalid numeric bound.
    let out = qcsync(&["budget", "--f0", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    // Precondition refusal: noise too strong for purification.
    let out = qcsync(&[
        "e2e",
        "--noise-p",
        "0.9",
        "--rounds",
        "2",
        "--n-pairs",
        "256",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("0.5"), "refusal names the bound: {err}");
}

#[test]
fn e2e_json_report_is_complete() {
    let out = qcsync(&[
        "e2e",
        "--n-pairs",
        "512",
        "--rounds",
        "1",
        "--noise-p",
        "0.05",
        "--clock-offset",
        "0.25",
        "--seed",
        "11",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["true_offset"], 0.25);
    assert!(report["estimated_offset"].is_number());
    assert!(report["trajectory"]["rounds"].as_array().unwrap().len() == 2);
    assert!(!report["messages"].as_array().unwrap().is_empty());
    // The message log carries no frame angles or clock offsets: every
    // payload is integers only.
    for msg in report["messages"].as_array().unwrap() {
        let payload = serde_json::to_string(&msg["message"]["payload"]).unwrap();
        assert!(
            !payload.contains("theta") && !payload.contains("offset"),
            "suspicious payload {payload}"
        );
    }
}

#[test]
fn json_format_mirrors_csv() {
    let csv = qcsync(&["budget", "--f0", "0.9", "--n-pairs", "64", "--seed", "1"]);
    let json = qcsync(&[
        "budget", "--f0", "0.9", "--n-pairs", "64", "--seed", "1", "--format", "json",
    ]);
    assert!(csv.status.success() && json.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let rows = parsed["rows"].as_array().unwrap();
    let csv_rows = stdout(&csv).lines().count() - 2;
    assert_eq!(rows.len(), csv_rows);
    assert_eq!(parsed["columns"][0], "n");
}

//! Integration tests of the command-line interface: file formats, exit
//! codes, and output determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisosyn"))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const SCALAR_PLANT: &str = r#"{
  "name": "scalar-demo",
  "A": [[2.0]],
  "B1": [[1.0]],
  "B2": [[1.0]],
  "C1": [[1.0], [0.0]],
  "C2": [[1.0]],
  "D11": [[0.0], [0.0]],
  "D12": [[0.0], [0.1]]
}"#;

#[test]
fn norm_command_computes_h2_and_hinf() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    write(
        &sys,
        r#"{"name":"lag","A":[[0.5]],"B":[[1.0]],"C":[[1.0]],"D":[[0.0]]}"#,
    );
    let out = bin().args(["norm", "--system"]).arg(&sys).args(["--kind", "h2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let value: f64 = stdout.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - (4.0f64 / 3.0).sqrt()).abs() < 1e-6, "h2 from CLI: {value}");

    let out = bin()
        .args(["norm", "--system"])
        .arg(&sys)
        .args(["--kind", "hinf", "--tol", "1e-8"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let value: f64 = stdout.split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((value - 2.0).abs() < 1e-5, "hinf from CLI: {value}");
}

#[test]
fn analyze_exit_codes_reflect_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    let gain = dir.path().join("gain.json");
    write(&plant, SCALAR_PLANT);
    write(&gain, r#"{"K": [[-2.0]]}"#);
    let ok = bin()
        .args(["analyze", "--plant"])
        .arg(&plant)
        .args(["--gain"])
        .arg(&gain)
        .args(["--a", "0.5", "--gamma", "2.0"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let tight = bin()
        .args(["analyze", "--plant"])
        .arg(&plant)
        .args(["--gain"])
        .arg(&gain)
        .args(["--a", "0.5", "--gamma", "0.5"])
        .output()
        .unwrap();
    assert_eq!(tight.status.code(), Some(2));
}

#[test]
fn parse_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    write(
        &broken,
        r#"{"name":"x","A":[[0.5]],"B1":[[1.0]],
            "C1":[[1.0]],"C2":[[1.0]],"D11":[[0.0]],"D12":[[0.0]]}"#,
    );
    let out = bin()
        .args(["analyze", "--plant"])
        .arg(&broken)
        .args(["--gain"])
        .arg(&broken)
        .args(["--a", "0.5", "--gamma", "1.0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("B2"), "stderr does not name the missing matrix: {err}");
}

#[test]
fn synthesize_writes_a_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    write(&plant, SCALAR_PLANT);
    let run = |out_name: &str| -> (i32, String) {
        let out_path = dir.path().join(out_name);
        let out = bin()
            .args(["synthesize", "--plant"])
            .arg(&plant)
            .args(["--a", "0.5", "--gamma", "1.3", "--out"])
            .arg(&out_path)
            .output()
            .unwrap();
        (out.status.code().unwrap(), std::fs::read_to_string(&out_path).unwrap())
    };
    let (code_a, report_a) = run("report_a.json");
    let (code_b, report_b) = run("report_b.json");
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(report_a, report_b, "reports differ across identical runs");
    let parsed: serde_json::Value = serde_json::from_str(&report_a).unwrap();
    assert_eq!(parsed["status"], "success");
    assert_eq!(parsed["schema_version"], 1);
    assert!(parsed["k"].is_array());

    // an unachievable bound exits 2 and still writes a failed-status report
    let out_path = dir.path().join("failed.json");
    let out = bin()
        .args(["synthesize", "--plant"])
        .arg(&plant)
        .args(["--a", "0.5", "--gamma", "0.5", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(parsed["status"].as_str().unwrap().starts_with("failed"));
}

#[test]
fn f4e_emits_reports_sigma_and_gain_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["f4e", "--point", "2", "--mode", "aniso", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report_path = dir.path().join("f4e_point2_aniso.report.json");
    let sigma_path = dir.path().join("f4e_point2_aniso.sigma.csv");
    let gains_path = dir.path().join("gains_aniso.csv");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["status"], "success");
    assert_eq!(report["mode"], "aniso");
    assert_eq!(report["gamma_bound"], 0.48);
    let sigma = std::fs::read_to_string(&sigma_path).unwrap();
    assert!(sigma.starts_with("freq_rad_s,sigma_max\n"));
    assert_eq!(sigma.lines().count(), 401);
    let gains = std::fs::read_to_string(&gains_path).unwrap();
    assert!(gains.starts_with("point,mode,K1,K2,gain_norm\n"));
    assert!(gains.lines().nth(1).unwrap().starts_with("2,aniso,"));
}

#[test]
fn f4e_infeasible_point_exits_2_with_failed_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["f4e", "--point", "4", "--mode", "hinf", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("f4e_point4_hinf.report.json")).unwrap(),
    )
    .unwrap();
    assert!(report["status"].as_str().unwrap().starts_with("failed"));
}

//! End-to-end tests of the binary: subcommand round trips, JSON output,
//! config files and exit codes.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elliptail"))
}

fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
    path
}

fn model_json(dir: &Path) -> std::path::PathBuf {
    write_file(
        dir,
        "model.json",
        r#"{"family":"student","nu":2.0,"mu":[0,0,0,0],
            "sigma":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#,
    )
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_json(dir.path());
    let data = dir.path().join("z.csv");
    let out = bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "20000", "--seed", "42", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["estimate-quantile", "--data"])
        .arg(&data)
        .args(["--x", "1,0,0", "--model"])
        .arg(&model)
        .args(["--a", "1.25", "--json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let value = v["risk"]["value"].as_f64().unwrap();
    assert!(value > 5.0 && value < 40.0, "quantile = {value}");
    assert_eq!(v["risk"]["kind"], "quantile");
    assert!(v["config"]["a"].as_f64().unwrap() == 1.25);

    // Same seed, same sample: determinism through the CLI.
    let data2 = dir.path().join("z2.csv");
    bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "20000", "--seed", "42", "--output"])
        .arg(&data2)
        .output()
        .unwrap();
    assert_eq!(
        std::fs::read(&data).unwrap(),
        std::fs::read(&data2).unwrap()
    );
}

#[test]
fn estimate_risk_converts_the_radial_part() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_json(dir.path());
    let data = dir.path().join("z.csv");
    bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "10000", "--seed", "7", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    let q: serde_json::Value = serde_json::from_str(&stdout_str(
        &bin()
            .args(["estimate-quantile", "--data"])
            .arg(&data)
            .args(["--x", "1,0,0", "--model"])
            .arg(&model)
            .args(["--a", "1.25", "--json"])
            .output()
            .unwrap(),
    ))
    .unwrap();
    let hg: serde_json::Value = serde_json::from_str(&stdout_str(
        &bin()
            .args(["estimate-risk", "--data"])
            .arg(&data)
            .args(["--x", "1,0,0", "--model"])
            .arg(&model)
            .args(["--a", "1.25", "--measure", "hg:1", "--json"])
            .output()
            .unwrap(),
    ))
    .unwrap();
    let gamma = q["extremal"]["gamma_hat"].as_f64().unwrap();
    let gamma_cond = 1.0 / (1.0 / gamma + 3.0);
    let factor = 1.0 / (1.0 - gamma_cond);
    let ratio = hg["risk"]["radial"].as_f64().unwrap() / q["risk"]["radial"].as_f64().unwrap();
    assert!((ratio - factor).abs() < 1e-9, "ratio {ratio} vs factor {factor}");
    assert_eq!(hg["risk"]["kind"], "hg:1");
}

#[test]
fn montecarlo_runs_plan_and_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_file(
        dir.path(),
        "plan.json",
        r#"{
            "model": {"family":"student","nu":2.0,"mu":[0,0,0,0],
                      "sigma":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]},
            "x": [1.0, 0.0, 0.0],
            "schedule": {"a":1.25,"b":0.6,"c":0.2,"rho":-1.0,"gamma_ref":0.5,"n_dim":3},
            "sizes": [1000, 2000],
            "replicates": 4,
            "measures": ["quantile", "hg:1"],
            "base_seed": 11
        }"#,
    );
    let csv_path = dir.path().join("report.csv");
    let json_path = dir.path().join("report.json");
    let out = bin()
        .args(["montecarlo", "--plan"])
        .arg(&plan)
        .args(["--out-csv"])
        .arg(&csv_path)
        .args(["--out-json"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_str(&out);
    assert!(text.contains("m_n ="), "summary missing: {text}");

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 4); // header + sizes*measures*replicates
    assert!(lines[0].starts_with("n,measure,replicate,estimate,oracle,ratio"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["plan"]["replicates"], 4);
    assert_eq!(report["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn real_data_pipeline_over_synthetic_returns() {
    // Build a synthetic returns table from a Student sample so the pipeline
    // has realistic heavy-tailed input.
    let dir = tempfile::tempdir().unwrap();
    let model = model_json(dir.path());
    let raw = dir.path().join("raw.csv");
    bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "2520", "--seed", "3", "--output"])
        .arg(&raw)
        .output()
        .unwrap();
    let mut table = String::from("Date,A,B,C,Y\n");
    for (i, line) in std::fs::read_to_string(&raw).unwrap().lines().enumerate() {
        table.push_str(&format!("day{i},{line}\n"));
    }
    let returns = write_file(dir.path(), "returns.csv", &table);
    let out = bin()
        .args(["real-data", "--data"])
        .arg(&returns)
        .args(["--covariates", "A,B,C", "--target", "Y", "--json"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let alpha = v["outcome"]["alpha"].as_f64().unwrap();
    assert!(alpha > 0.99 && alpha < 1.0);
    // a defaults to (1-b)·η̂.
    let eta = v["outcome"]["extremal"]["eta_hat"].as_f64().unwrap();
    let a = v["outcome"]["a_resolved"].as_f64().unwrap();
    assert!((a - 0.4 * eta).abs() < 1e-12);
}

#[test]
fn config_file_fully_determines_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let model = model_json(dir.path());
    let data = dir.path().join("z.csv");
    bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "5000", "--seed", "5", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    let cfg = write_file(
        dir.path(),
        "run.json",
        &format!(
            r#"{{"data":"{}","x":[1.0,0.0,0.0],"model":"{}","a":1.25,"json":true}}"#,
            data.display(),
            model.display()
        ),
    );
    let with_config = stdout_str(
        &bin().args(["estimate-quantile", "--config"]).arg(&cfg).output().unwrap(),
    );
    let with_flags = stdout_str(
        &bin()
            .args(["estimate-quantile", "--data"])
            .arg(&data)
            .args(["--x", "1,0,0", "--model"])
            .arg(&model)
            .args(["--a", "1.25", "--json"])
            .output()
            .unwrap(),
    );
    let a: serde_json::Value = serde_json::from_str(&with_config).unwrap();
    let b: serde_json::Value = serde_json::from_str(&with_flags).unwrap();
    assert_eq!(a["risk"]["value"], b["risk"]["value"]);
}

#[test]
fn exit_codes_distinguish_domain_and_io_errors() {
    // Missing file: I/O error, exit 2.
    let out = bin()
        .args(["estimate-params", "--data", "/nonexistent/file.csv", "--x", "1,0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    // Domain error: Hill k impossible on a tiny sample, exit 1.
    let dir = tempfile::tempdir().unwrap();
    let tiny = write_file(dir.path(), "tiny.csv", "1.0,2.0\n");
    let out = bin()
        .args(["estimate-params", "--data"])
        .arg(&tiny)
        .args(["--x", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:"), "stderr: {err}");

    // Existence violation in estimate-risk: domain error, exit 1.
    let model = model_json(dir.path());
    let data = dir.path().join("z.csv");
    bin()
        .args(["simulate", "--model"])
        .arg(&model)
        .args(["--n", "5000", "--seed", "9", "--output"])
        .arg(&data)
        .output()
        .unwrap();
    let out = bin()
        .args(["estimate-risk", "--data"])
        .arg(&data)
        .args(["--x", "1,0,0", "--model"])
        .arg(&model)
        .args(["--a", "1.25", "--measure", "hg:6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exist"));
}

#[test]
fn oracle_subcommand_spot_values() {
    let out = bin()
        .args([
            "oracle", "--what", "table1", "--family", "student", "--nu", "2", "--n-dim", "3",
            "--m", "1", "--json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert!((v["coefficients"]["eta"].as_f64().unwrap() - 2.5).abs() < 1e-12);
    assert!((v["coefficients"]["ell"].as_f64().unwrap() - 5.292757).abs() < 1e-5);

    let out = bin()
        .args(["oracle", "--what", "conditions", "--a-exp", "0.5"])
        .output()
        .unwrap();
    let text = stdout_str(&out);
    assert!(text.contains("(C_int) pass"));
    assert!(text.contains("(C_high) FAIL"));
}

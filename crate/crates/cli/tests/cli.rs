use std::process::{Command, Output};

use beta_calc::inequalities::InequalityReport;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beta-calc"))
        .args(args)
        .env_remove("BETA_CALC_CONFIG")
        .output()
        .expect("run beta-calc")
}

fn run_with_config(args: &[&str], config: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beta-calc"))
        .args(args)
        .env("BETA_CALC_CONFIG", config)
        .output()
        .expect("run beta-calc")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn integrate_values_and_exit_codes() {
    let out = run(&["integrate", "--map", "jackson", "--q", "0.5", "--f", "x", "--a", "0", "--b", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["result"]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["result"]["converged"], true);
    assert_eq!(v["tool_version"], env!("CARGO_PKG_VERSION"));

    let out = run(&["integrate", "--f", "1", "--a", "0", "--b", "1", "--map", "jackson", "--q", "0.5", "--format", "json"]);
    assert!((json(&out)["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    assert_eq!(code(&run(&["integrate", "--map", "hahn", "--q", "1.5", "--omega", "0"])), 2);
    assert_eq!(code(&run(&["integrate", "--map", "hahn", "--q", "0.5", "--omega", "-1"])), 2);
    assert_eq!(code(&run(&["integrate", "--f", "x +* 2"])), 2);
    assert_eq!(code(&run(&["integrate", "--a", "1", "--b", "0"])), 2);
    assert_eq!(code(&run(&["integrate", "--term-tol", "-1"])), 2);

    let out = run(&["integrate", "--map", "jackson", "--q", "0.99", "--k-max", "20"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("value ="));
}

#[test]
fn custom_map() {
    let out = run(&[
        "integrate", "--map", "custom", "--beta-expr", "0.5*x + 1", "--probe-lo", "-10", "--probe-hi", "10", "--f", "1", "--a", "0",
        "--b", "4", "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["result"]["value"].as_f64().unwrap() - 4.0).abs() < 1e-10);
    assert_eq!(code(&run(&["integrate", "--map", "custom", "--beta-expr", "2*x"])), 2);
    assert_eq!(code(&run(&["integrate", "--map", "custom"])), 2);
}

#[test]
fn derivative() {
    let out = run(&["derivative", "--t", "2", "--f", "x^2", "--q", "0.5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["result"]["value"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    let out = run(&["derivative", "--t", "0", "--f", "x^2 + 3*x", "--s0-derivative", "3", "--format", "json"]);
    assert_eq!(json(&out)["result"]["value"].as_f64().unwrap(), 3.0);
    assert_eq!(code(&run(&["derivative", "--t", "1", "--fd-step", "0"])), 2);
}

#[test]
fn trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let out = run(&[
        "integrate", "--map", "hahn", "--q", "0.5", "--omega", "1", "--f", "x^2", "--a", "0", "--b", "3", "--format", "json",
        "--trace", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let value = json(&out)["result"]["value"].as_f64().unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["k", "grid_point", "term", "partial_sum"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 10);
    assert_eq!(&rows[0][0], "0");
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 3.0);
    let last: f64 = rows.last().unwrap()[3].parse().unwrap();
    assert_eq!(last, value);
}

#[test]
fn check_examples() {
    let out = run(&["check", "sharpness", "--map", "jackson", "--q", "0.5", "--a", "-1", "--b", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["slack"].as_f64().unwrap().abs() < 1e-9);
    }

    let out = run(&["check", "gruss", "--f", "x", "--g", "x^3", "--a", "-1", "--b", "1", "--map", "jackson", "--q", "0.5"]);
    assert_eq!(code(&out), 0);

    let out = run(&["check", "korkine", "--seed", "7", "--cases", "40", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["summary"]["cases"], 40);
    assert!(v["summary"]["checks"][0]["max_lhs"].as_f64().unwrap() < 1e-9);

    for suite in ["pre-gruss", "cs", "holder", "korkine", "rs-gruss", "rs-variants", "ftc", "ibp"] {
        let out = run(&["check", suite, "--f", "x^2 + 1", "--g", "x^2", "--u", "x - 2*abs(x)", "--a", "-1", "--b", "2"]);
        assert_eq!(code(&out), 0, "{suite}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn check_violation_and_input_errors() {
    let out = run(&["check", "gruss", "--f", "x", "--g", "x", "--m", "-0.1", "--M", "0.1", "--n", "-0.1", "--N", "0.1"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("violated"));

    assert_eq!(code(&run(&["check", "nonsense"])), 2);
    assert_eq!(code(&run(&["check", "gruss", "--variant", "trapezoid"])), 2);
    assert_eq!(code(&run(&["check", "rs-variants", "--variant", "nope"])), 2);
    assert_eq!(code(&run(&["check", "gruss", "--a", "0.5", "--b", "1"])), 2);
    assert_eq!(code(&run(&["check", "gruss", "--m", "1"])), 2);
    assert_eq!(code(&run(&["check", "sharpness", "--a", "-1", "--b", "2"])), 2);
    assert_eq!(code(&run(&["check", "rs-variants", "--variant", "trapezoid", "--f", "x^2"])), 2);
    assert_eq!(code(&run(&["check", "rs-gruss", "--f", "x", "--u", "sin(1/x)", "--a", "0", "--b", "1"])), 3);
}

#[test]
fn rs_variants_skip_unmet_hypotheses() {
    let out = run(&["check", "rs-variants", "--f", "x^2", "--u", "x", "--g", "x^2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["reports"].as_array().unwrap().len(), 4);
    assert_eq!(v["skipped"][0]["name"], "rs-trapezoid");
}

#[test]
fn prob_command() {
    let out = run(&["prob", "--map", "jackson", "--q", "0.5", "--a", "0", "--b", "1", "--h", "x", "--f", "x^2", "--g", "x^2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let r = &v["result"];
    assert!((r["p_ab"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((r["expected_h"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let mass = r["total_mass"].as_f64().unwrap();
    assert!((1.0 - 1e-12..=1.0).contains(&mass));
    assert!((mass + r["mass_deficit"].as_f64().unwrap() - 1.0).abs() < 1e-15);

    let out = run(&["prob", "--map", "hahn", "--q", "0.5", "--omega", "1", "--a", "0", "--b", "4", "--f", "x^2", "--g", "x", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["atoms_b"][0]["weight"].as_f64().unwrap(), 0.25);
    assert_eq!(v["result"]["atoms_b"][0]["point"].as_f64().unwrap(), 4.0);

    assert_eq!(code(&run(&["prob", "--map", "jackson", "--a", "0.5", "--b", "1"])), 2);
    assert_eq!(code(&run(&["prob", "--map", "jackson", "--a", "-1", "--b", "-0.5"])), 2);
}

#[test]
fn json_reports_round_trip() {
    for args in [
        vec!["check", "rs-gruss", "--f", "x + sgn(x)", "--u", "x^2", "--format", "json"],
        vec!["check", "gruss", "--seed", "3", "--cases", "20", "--format", "json"],
        vec!["prob", "--q", "0.3", "--a", "0", "--b", "2", "--f", "x^2", "--g", "exp(x)", "--format", "json"],
    ] {
        let out = run(&args);
        let v = json(&out);
        let reports: Vec<InequalityReport> = serde_json::from_value(v["reports"].clone()).unwrap();
        assert!(!reports.is_empty());
        let again = serde_json::to_value(&reports).unwrap();
        assert_eq!(again, v["reports"]);
        let back: Vec<InequalityReport> = serde_json::from_value(again).unwrap();
        assert_eq!(back, reports);
    }
}

#[test]
fn deterministic_output() {
    let args = ["check", "cs", "--seed", "9", "--cases", "30", "--format", "json"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let seq: Vec<&str> = args.iter().copied().chain(["--sequential"]).collect();
    let a = json(&run(&args));
    let b = json(&run(&seq));
    assert_eq!(a["reports"], b["reports"]);
    assert_eq!(a["summary"], b["summary"]);
}

#[test]
fn csv_and_text_formats() {
    let out = run(&["check", "gruss", "--format", "csv"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(&rdr.headers().unwrap()[0], "name");
    let names: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(names, vec!["gruss", "functional-bound"]);

    let out = run(&["check", "gruss"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("gruss"));
    assert!(text.contains("holds"));
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# defaults for this run\nmap = jackson\nq = 0.5\nf = x\na = 0\nb = 2\nformat = json\n").unwrap();

    let v = json(&run_with_config(&["integrate"], &path));
    assert_eq!(v["config_echo"]["b"], 2.0);
    assert!((v["result"]["value"].as_f64().unwrap() - 4.0 / 1.5).abs() < 1e-12);

    let v = json(&run_with_config(&["integrate", "--b", "1"], &path));
    assert_eq!(v["config_echo"]["b"], 1.0);
    assert_eq!(v["config_echo"]["map"]["q"], 0.5);
    assert!((v["result"]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    std::fs::write(&path, "colour = blue\n").unwrap();
    assert_eq!(code(&run_with_config(&["integrate"], &path)), 2);
    assert_eq!(code(&run_with_config(&["integrate"], &dir.path().join("missing.conf"))), 2);
}

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbsgap"))
        .args(args)
        .env_remove("GIBBSGAP_ENUM_CAP")
        .output()
        .expect("binary runs")
}

fn ok_report(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_beta_inverts_w2_tilt() {
    let w2 = fixture("w2.json");
    let r = ok_report(&["solve-beta", "--instance", &w2, "--gamma", "0.110945"]);
    let tilt = &r["result"]["tilt"];
    assert!((num(&tilt["beta"]) - 1.0).abs() < 1e-4);
    assert!((num(&tilt["gamma"]) - 0.110945).abs() < 1e-10);
    assert_eq!(tilt["beta_infinite"], Value::Bool(false));
    assert_eq!(r["inputs"][0]["role"], "instance");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_budget_returns_reference_with_infinite_beta() {
    let w2 = fixture("w2.json");
    let r = ok_report(&["solve-beta", "--instance", &w2, "--gamma", "0"]);
    let tilt = &r["result"]["tilt"];
    assert_eq!(tilt["beta"], "inf");
    assert_eq!(tilt["beta_infinite"], Value::Bool(true));
    assert_eq!(tilt["measure"], tilt["reference"]);
}

#[test]
fn infeasible_budget_exits_2_citing_supremum() {
    let out = run(&["solve-beta", "--instance", &fixture("w2.json"), "--gamma", "0.8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("0.693147"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn equal_measures_decompose_to_zero() {
    let r = ok_report(&[
        "decompose",
        "--instance",
        &fixture("w3.json"),
        "--model",
        "theta1",
        "--p1",
        "weights:0.2,0.3,0.5",
        "--p2",
        "weights:0.2,0.3,0.5",
        "--beta",
        "1.5",
    ]);
    let d = &r["result"]["decomposition"];
    assert_eq!(num(&d["g_direct"]), 0.0);
    assert_eq!(num(&d["g_closed_form"]), 0.0);
    let g = &d["grouping"];
    assert_eq!(num(&g["worst_case"]), 0.0);
    assert_eq!(num(&g["reference"]), 0.0);
}

#[test]
fn dataset_decomposition_with_aggregated_reference() {
    let r = ok_report(&[
        "decompose",
        "--instance",
        &fixture("w3.json"),
        "--model",
        "theta1",
        "--p1",
        &format!("dataset:{}", fixture("z1.json")),
        "--p2",
        &format!("dataset:{}", fixture("z2.json")),
        "--reference",
        "aggregate",
        "--beta",
        "1",
    ]);
    let res = &r["result"];
    assert_eq!(res["form"], "datasets");
    assert!(num(&res["decomposition"]["residual"]).abs() <= 1e-9);
    // L(z1) = 1/3, L(z2) = 5/4.
    assert!((num(&res["empirical_risk_difference"]) - (1.0 / 3.0 - 1.25)).abs() < 1e-15);
    assert_eq!(res["decomposition"]["terms"].as_array().unwrap().len(), 4);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn aggregate_requires_two_datasets() {
    let out = run(&[
        "decompose",
        "--instance",
        &fixture("w3.json"),
        "--model",
        "theta1",
        "--p1",
        "data",
        "--p2",
        "reference",
        "--reference",
        "aggregate",
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mutually_singular_measures_exit_2() {
    let out = run(&[
        "decompose",
        "--instance",
        &fixture("w2.json"),
        "--p1",
        "weights:1,0",
        "--p2",
        "weights:0,1",
        "--reference",
        "weights:0,1",
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`z1`"), "{}", stderr(&out));
}

#[test]
fn mixed_reference_handles_singular_pair() {
    let r = ok_report(&[
        "decompose",
        "--instance",
        &fixture("w2.json"),
        "--p1",
        "weights:1,0",
        "--p2",
        "weights:0,1",
        "--reference",
        "mix",
        "--gamma",
        "0.1",
    ]);
    let d = &r["result"]["decomposition"];
    assert!((num(&d["g_direct"]) + 1.0).abs() < 1e-15);
    assert!(num(&d["residual"]).abs() <= 1e-9);
}

#[test]
fn gap_with_both_reference_choices() {
    let w3 = fixture("w3.json");
    let z = fixture("z2.json");
    for extra in [&[][..], &["--reference", "reference"][..]] {
        let mut args = vec![
            "gap",
            "--instance",
            &w3,
            "--model",
            "theta2",
            "--dataset",
            &z,
            "--beta",
            "0.7",
        ];
        args.extend_from_slice(extra);
        let r = ok_report(&args);
        let res = &r["result"];
        // Population risk 0.5·2 + 0.3·1 = 1.3; empirical (1 + 0 + 0 + 2)/4 = 0.75.
        assert!((num(&res["gap"]) - 0.55).abs() < 1e-15);
        assert!(num(&res["decomposition"]["residual"]).abs() <= 1e-9);
    }
}

#[test]
fn gibbs_audit_matches_oracle() {
    let r = ok_report(&[
        "gibbs-audit",
        "--instance",
        &fixture("w3.json"),
        "--lambda",
        "1",
        "--n",
        "2",
    ]);
    let res = &r["result"];
    assert_eq!(res["datasets"], 9);
    assert!((num(&res["doubly_expected_gap"]) - 0.244_972_149_934_520_15).abs() < 1e-14);
    assert!((num(&res["mutual_info"]) - 0.111_811_484_639_698_16).abs() < 1e-14);
    assert!((num(&res["lautum_info"]) - 0.133_160_665_294_821_99).abs() < 1e-14);
    assert!(num(&res["residual"]).abs() <= 1e-8);
}

#[test]
fn single_model_gibbs_audit_is_trivial() {
    let r = ok_report(&[
        "gibbs-audit",
        "--instance",
        &fixture("w2.json"),
        "--lambda",
        "2",
        "--n",
        "3",
    ]);
    let res = &r["result"];
    assert_eq!(num(&res["mutual_info"]), 0.0);
    assert_eq!(num(&res["lautum_info"]), 0.0);
    assert!(num(&res["doubly_expected_gap"]).abs() < 1e-15);
}

#[test]
fn enumeration_cap_exits_2_with_required_count() {
    let out = run(&[
        "gibbs-audit",
        "--instance",
        &fixture("w3.json"),
        "--lambda",
        "1",
        "--n",
        "13",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1594323"), "{}", stderr(&out));

    let out = Command::new(env!("CARGO_BIN_EXE_gibbsgap"))
        .args([
            "gibbs-audit",
            "--instance",
            &fixture("w3.json"),
            "--lambda",
            "1",
            "--n",
            "2",
        ])
        .env("GIBBSGAP_ENUM_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let r = ok_report(&["verify", "--trials", "10"]);
    assert_eq!(r["result"]["passed"], Value::Bool(true));

    let out = run(&["verify", "--trials", "10", "--threshold", "1e-15"]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).expect("report written on failure");
    assert_eq!(report["result"]["passed"], Value::Bool(false));

    let r = ok_report(&["verify", "--trials", "0"]);
    assert_eq!(r["result"]["summary"]["identities"], Value::Array(vec![]));
}

#[test]
fn verify_reads_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"trials": 4, "seed": 7, "alphabet_size": [2, 3]}"#).unwrap();
    let r = ok_report(&["verify", "--spec", spec.to_str().unwrap(), "--trials", "5"]);
    assert_eq!(r["result"]["spec"]["trials"], 5);
    assert_eq!(r["result"]["spec"]["seed"], 7);
    assert_eq!(r["inputs"][0]["role"], "spec");

    std::fs::write(&spec, r#"{"trails": 4}"#).unwrap();
    let out = run(&["verify", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("trails"));
}

#[test]
fn reports_are_byte_identical_and_output_is_not_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let w3 = fixture("w3.json");
    for path in [&a, &b] {
        let out = run(&[
            "tilt",
            "--instance",
            &w3,
            "--model",
            "theta2",
            "--beta",
            "0.3",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn input_errors_name_file_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"alphabet":["a","b"],"reference":[0.5],"models":["m"],"loss":[[0,1]]}"#,
            "field `reference`",
        ),
        (
            r#"{"alphabet":["a","b"],"reference":[0.5,0.5],"models":["m"],"loss":[[0,1,2]]}"#,
            "field `loss[0]`",
        ),
        (
            r#"{"alphabet":["a","b"],"reference":[0.5,0.5],"models":["m"],"loss":[[0,"x"]]}"#,
            "field `loss[0][1]`",
        ),
        (
            r#"{"alphabet":["a","a"],"reference":[0.5,0.5],"models":["m"],"loss":[[0,1]]}"#,
            "field `alphabet`",
        ),
        (
            r#"{"alphabet":["a","b"],"reference":[0.5,0.5],"models":["m"],"loss":[[0,-1]]}"#,
            "field `loss[0][1]`",
        ),
        (r#"{"alphabet":["a","b"], "#, "line 1"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.json"));
        std::fs::write(&path, text).unwrap();
        let out = run(&["tilt", "--instance", path.to_str().unwrap(), "--beta", "1"]);
        assert_eq!(out.status.code(), Some(1), "case {i}");
        let msg = stderr(&out);
        assert!(
            msg.contains(path.to_str().unwrap()) && msg.contains(field),
            "case {i}: {msg}"
        );
    }
}

#[test]
fn dataset_errors_name_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.json");
    std::fs::write(&path, r#"{"entries": ["z1", "q"]}"#).unwrap();
    let out = run(&[
        "gap",
        "--instance",
        &fixture("w2.json"),
        "--dataset",
        path.to_str().unwrap(),
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("entries[1]"));
}

#[test]
fn infinite_loss_on_support_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inf.json");
    std::fs::write(
        &path,
        r#"{"alphabet":["a","b"],"reference":[0.5,0.5],"models":["m"],"loss":[[0,"inf"]]}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let out = run(&["tilt", "--instance", p, "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let r = ok_report(&["tilt", "--instance", p, "--beta", "1", "--reference", "weights:1,0"]);
    assert_eq!(num(&r["result"]["tilt"]["gamma"]), 0.0);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(run(&["tilt", "--beta", "1"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["tilt", "--instance", &fixture("w2.json"), "--beta", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "decompose",
            "--instance",
            &fixture("w2.json"),
            "--p1",
            "data",
            "--p2",
            "data"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

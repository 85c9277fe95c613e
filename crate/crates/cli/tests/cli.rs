use std::process::{Command, Output};

use pfcycles::distributions::JointDistribution;
use pfcycles::exact_math::{parse_rational, rat};
use pfcycles::stein::{tv_upper_bound, SteinReport};
use serde_json::Value;

fn pfcycles(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfcycles"))
        .args(args)
        .env_remove("PFCYCLES_SEED")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = pfcycles(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn count_and_check() {
    assert_eq!(
        ok_json(&["count", "--n", "3"]),
        serde_json::json!({"n": 3, "count": "16"})
    );
    assert_eq!(
        ok_json(&["check", "2,2"]),
        serde_json::json!({"is_parking_function": false})
    );
    assert_eq!(
        ok_json(&["check", "6,1,2,4,1,9,1,6,8,4,2,10"]),
        serde_json::json!({"is_parking_function": true})
    );
}

#[test]
fn enumerate_dumps_one_sequence_per_line() {
    let out = pfcycles(&["enumerate", "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 16);
    assert_eq!(lines[0], "1,1,1");
    assert_eq!(lines[15], "3,2,1");
    for line in lines {
        let seq: pfcycles::PrefSeq = line.parse().unwrap();
        assert!(pfcycles::parking::is_parking_function(&seq));
    }
}

#[test]
fn completions_methods_agree() {
    for method in ["formula", "block", "brute"] {
        let v = ok_json(&["completions", "--n", "4", "--v", "2,3", "--method", method]);
        assert_eq!(v["count"], "7", "{method}");
        assert_eq!(v["v"], serde_json::json!([2, 3]));
        assert_eq!(v["method"], method);
    }
    let out = pfcycles(&["completions", "--n", "4", "--v", "1,3", "--method", "block"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_is_sparse() {
    let v = ok_json(&["profile", "6,1,2,4,1,9,1,6,8,4,2,10"]);
    assert_eq!(
        v,
        serde_json::json!({"n": 12, "counts": {"1": 1, "3": 1}, "total": 2})
    );
}

#[test]
fn tv_report_round_trips() {
    let v = ok_json(&["tv", "--n", "7", "--d", "1", "--exact"]);
    assert_eq!(
        parse_rational(v["bound"].as_str().unwrap()).unwrap(),
        tv_upper_bound(7, 1).unwrap()
    );
    assert!((v["tv"].as_f64().unwrap() - 0.037223501817).abs() < 1e-10);
    assert_eq!(v["method"], "exact");
}

#[test]
fn tv_exports_distribution() {
    let dir = std::env::temp_dir().join(format!("pfcycles-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("law.csv");
    let out = pfcycles(&[
        "tv",
        "--n",
        "2",
        "--d",
        "1",
        "--exact",
        "--dist-out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "w,mass\n0,1/3\n1,1/3\n2,1/3\n"
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn stein_report_round_trips() {
    let out = pfcycles(&["stein", "--n", "5", "--d", "1", "--exact"]);
    assert!(out.status.success());
    let report: SteinReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.n, 5);
    assert_eq!(report.records.len(), 1);
    assert_eq!(report.records[0].term_a_exact, Some(rat(11, 16)));
    assert_eq!(report.records[0].term_b_exact, Some(rat(7, 12)));
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again.as_bytes(), &out.stdout[..]);
}

#[test]
fn monte_carlo_is_reproducible() {
    let runs: Vec<Vec<u8>> = [
        vec![
            "stein",
            "--n",
            "30",
            "--d",
            "2",
            "--samples",
            "500",
            "--seed",
            "9",
        ],
        vec![
            "stein",
            "--n",
            "30",
            "--d",
            "2",
            "--samples",
            "500",
            "--seed",
            "9",
        ],
        vec![
            "stein",
            "--n",
            "30",
            "--d",
            "2",
            "--samples",
            "500",
            "--seed",
            "9",
            "--workers",
            "3",
        ],
    ]
    .iter()
    .map(|a| {
        let out = pfcycles(a);
        assert!(out.status.success());
        out.stdout
    })
    .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);

    let sample =
        |seed: &str| pfcycles(&["sample", "--n", "9", "--samples", "5000", "--seed", seed]).stdout;
    assert_eq!(sample("4"), sample("4"));
    assert_ne!(sample("4"), sample("5"));

    let seeded_by_env = Command::new(env!("CARGO_BIN_EXE_pfcycles"))
        .args(["sample", "--n", "9", "--samples", "5000"])
        .env("PFCYCLES_SEED", "4")
        .output()
        .unwrap();
    assert_eq!(seeded_by_env.stdout, sample("4"));
}

#[test]
fn empirical_tv_and_moments() {
    let v = ok_json(&[
        "tv",
        "--n",
        "7",
        "--d",
        "2",
        "--samples",
        "20000",
        "--seed",
        "1",
    ]);
    assert_eq!(v["method"], "mc");
    assert!((v["tv"].as_f64().unwrap() - 0.106).abs() < 0.03);

    let out = pfcycles(&["moments", "--n", "6", "--method", "enum", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,k,method,value,approx,stderr\n"));
    assert!(text.contains("6,2,enum,3/7,"));
    let rows = ok_json(&["moments", "--n", "6", "--k", "3", "--method", "formula"]);
    assert_eq!(rows[0]["value"], "10/49");
}

#[test]
fn joint_distribution_json_parses() {
    let law = pfcycles::distributions::exact_joint_distribution(3, 2, false).unwrap();
    let text = serde_json::to_string(&law).unwrap();
    let back: JointDistribution = serde_json::from_str(&text).unwrap();
    assert_eq!(back, law);
}

#[test]
fn errors_are_machine_readable() {
    let out = pfcycles(&["sample", "--n", "4", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "invalid_argument");

    let out = pfcycles(&["enumerate", "--n", "9"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "guard_exceeded");

    let out = pfcycles(&["stein", "--n", "4", "--d", "4", "--exact"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pfcycles(&["check", "0,1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = pfcycles(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "invalid_argument");
}

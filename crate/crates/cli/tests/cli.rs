use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn apent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apent")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn regular_spec_gives_all_zero_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = apent(&[
        "entropy",
        "--spec",
        spec("regular.json").to_str().unwrap(),
        "--method",
        "all",
        "--levels",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 1);
    let reports = json(&out);
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for r in reports {
        assert_eq!(r["estimate"].as_f64().unwrap(), 0.0);
        assert!(r["partial_sums"]
            .as_array()
            .unwrap()
            .iter()
            .all(|v| v.as_f64() == Some(0.0)));
    }
}

#[test]
fn haagerup_on_z_gives_log_three_quarters() {
    let o = apent(&[
        "entropy",
        "--spec",
        spec("haagerup_z_05.json").to_str().unwrap(),
        "--method",
        "verblunsky",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = v[0]["estimate"].as_f64().unwrap();
    assert!((est - 0.75f64.ln()).abs() < 1e-12);
}

#[test]
fn csv_output_and_letter_order() {
    let o = apent(&[
        "entropy",
        "--spec",
        spec("haagerup_r2.json").to_str().unwrap(),
        "--method",
        "seward",
        "--levels",
        "1",
        "--enum-order",
        "2,-1,-2,1",
        "--csv",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,level,term,partial_sum");
    assert_eq!(lines.len(), 3);
    let last: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!((last - (0.91f64.ln() + 0.75f64.ln())).abs() < 1e-9);
}

#[test]
fn invalid_inputs_exit_one() {
    assert_eq!(code(&apent(&["entropy", "--spec", "/nonexistent/spec.json"])), 1);
    assert_eq!(code(&apent(&["entropy", "--spec", "{not json"])), 1);
    assert_eq!(
        code(&apent(&[
            "entropy",
            "--spec",
            r#"{"kind":"haagerup","rank":1,"params":[{"re":1.5,"im":0}]}"#
        ])),
        1
    );
    let reg = spec("regular.json");
    assert_eq!(
        code(&apent(&[
            "entropy",
            "--spec",
            reg.to_str().unwrap(),
            "--method",
            "magic"
        ])),
        1
    );
    assert_eq!(
        code(&apent(&["entropy", "--spec", reg.to_str().unwrap(), "--tol", "-1"])),
        1
    );
    assert_eq!(
        code(&apent(&[
            "entropy",
            "--spec",
            reg.to_str().unwrap(),
            "--enum-order",
            "1,2"
        ])),
        1
    );
    assert_eq!(code(&apent(&["entropy", "--bogus-flag"])), 1);
    assert_eq!(code(&apent(&["simulate", "--suite", "nonsense"])), 1);
    assert_eq!(code(&apent(&["simulate", "--suite", "wishart", "--samples", "0"])), 1);
}

#[test]
fn singular_input_exits_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    let o = apent(&[
        "entropy",
        "--spec",
        r#"{"kind":"haagerup","rank":1,"params":[{"re":1,"im":0}]}"#,
        "--method",
        "formula1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&out)[0]["estimate"], "-inf");
    let v = apent(&[
        "verblunsky",
        "--spec",
        r#"{"kind":"haagerup","rank":1,"params":[{"re":1,"im":0}]}"#,
    ]);
    assert_eq!(code(&v), 2);
    assert!(String::from_utf8_lossy(&v.stderr).contains("step"));
}

#[test]
fn verblunsky_of_regular_is_zero() {
    let o = apent(&[
        "verblunsky",
        "--spec",
        spec("regular.json").to_str().unwrap(),
        "--levels",
        "1",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let coeffs = v["coefficients"].as_array().unwrap();
    assert_eq!(coeffs.len(), 16);
    for c in coeffs {
        for row in c["matrix"].as_array().unwrap() {
            for z in row.as_array().unwrap() {
                assert_eq!(z["re"].as_f64(), Some(0.0));
                assert_eq!(z["im"].as_f64(), Some(0.0));
            }
        }
    }
}

fn reported_error(summary: &str) -> f64 {
    let tail = summary.split("roundtrip max error ").nth(1).unwrap();
    tail.split(|c: char| c == ',' || c.is_whitespace())
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn verblunsky_roundtrip_and_inverse() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    let o = apent(&[
        "verblunsky",
        "--spec",
        spec("haagerup_r2_complex.json").to_str().unwrap(),
        "--levels",
        "1",
        "--roundtrip",
        "--out",
        seq.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(reported_error(&stdout(&o)) < 1e-9);

    let gram = dir.path().join("gram.json");
    let inv = apent(&[
        "verblunsky",
        "--inverse",
        seq.to_str().unwrap(),
        "--roundtrip",
        "--out",
        gram.to_str().unwrap(),
    ]);
    assert_eq!(code(&inv), 0, "{}", String::from_utf8_lossy(&inv.stderr));
    assert!(reported_error(&stdout(&inv)) < 1e-9);
    let g = json(&gram);
    assert_eq!(g["set"].as_array().unwrap().len(), 17);
    assert_eq!(g["matrix"].as_array().unwrap().len(), 17);
}

#[test]
fn malformed_coefficient_shapes_exit_one() {
    let dir = TempDir::new().unwrap();
    let seq = dir.path().join("seq.json");
    let o = apent(&[
        "verblunsky",
        "--spec",
        spec("haagerup_z_05.json").to_str().unwrap(),
        "--levels",
        "0",
        "--out",
        seq.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let mut v = json(&seq);
    // a 2×1 matrix where the enlargement needs 1×1
    v["coefficients"][0]["rows"] = 2.into();
    v["coefficients"][0]["matrix"] = serde_json::json!([[{"re": 0.1, "im": 0.0}], [{"re": 0.1, "im": 0.0}]]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(code(&apent(&["verblunsky", "--inverse", bad.to_str().unwrap()])), 1);
    let mut v = json(&seq);
    v["coefficients"][0]["rows"] = 3.into();
    std::fs::write(&bad, v.to_string()).unwrap();
    assert_eq!(code(&apent(&["verblunsky", "--inverse", bad.to_str().unwrap()])), 1);
}

#[test]
fn simulate_wishart_and_dildist_pass() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("w.json");
    let o = apent(&[
        "simulate",
        "--suite",
        "wishart",
        "--n",
        "16",
        "--samples",
        "20000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let r = json(&out);
    assert_eq!(r[0]["pass"], true);
    assert_eq!(r[0]["seed"], 7);
    assert!(r[0]["statistics"]["ks"].as_f64().unwrap() < 0.015);

    let o = apent(&[
        "simulate",
        "--suite",
        "dildist",
        "--n",
        "24",
        "--samples",
        "4000",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = json(&out);
    assert_eq!(r[0]["statistics"]["singular_grams"].as_f64(), Some(0.0));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let (da, db) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let run = |out: &Path, dump: &Path, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_apent"))
            .args(["simulate", "--suite", "sigma", "--samples", "3000", "--seed", "11"])
            .args(["--out", out.to_str().unwrap(), "--dump", dump.to_str().unwrap()])
            .env("APENT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    };
    run(&a, &da, "1");
    run(&b, &db, "4");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&da).unwrap(), std::fs::read(&db).unwrap());
    assert_eq!(std::fs::read_to_string(&da).unwrap().lines().count(), 3001);
}

#[test]
fn missing_seed_is_recorded() {
    let o = apent(&["simulate", "--suite", "ldp"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v[0]["seed"].is_u64());
    assert_eq!(v[0]["pass"], true);
}

#[test]
fn bad_thread_count_exits_one() {
    let o = Command::new(env!("CARGO_BIN_EXE_apent"))
        .args(["simulate", "--suite", "ldp"])
        .env("APENT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn mollify_profiles() {
    let o = apent(&[
        "mollify",
        "--spec",
        spec("regular.json").to_str().unwrap(),
        "--t-grid",
        "0.1,0.5,1",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("0")));

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.csv");
    let o = apent(&[
        "mollify",
        "--spec",
        spec("haagerup_z_05.json").to_str().unwrap(),
        "--t-grid",
        "0.2,0.4,0.6,0.8,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("nonincreasing"));
    let last = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .last()
        .unwrap()
        .to_string();
    let h: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((h - 0.75f64.ln()).abs() < 1e-9);

    assert_eq!(
        code(&apent(&[
            "mollify",
            "--spec",
            spec("regular.json").to_str().unwrap(),
            "--t-grid",
            ""
        ])),
        1
    );
    assert_eq!(
        code(&apent(&[
            "mollify",
            "--spec",
            spec("regular.json").to_str().unwrap(),
            "--t-grid",
            "0,0.5"
        ])),
        1
    );
}

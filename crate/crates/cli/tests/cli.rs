use std::process::{Command, Output};

use serde_json::Value;

use robust_wald::family::NormalKnownVar;
use robust_wald::record::RunRecord;
use robust_wald::robustness::{gross_error_sensitivity, Which};
use robust_wald::wald::{NullPoint, TestKind};

fn rts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rts")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--json", "-"]);
    let out = rts(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn tmp(name: &str) -> String {
    let dir = std::env::temp_dir().join(format!("rts-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["test", "--bogus"],
        vec!["test", "--family", "poisson", "--data", "no-such-file.csv"],
        vec!["test", "--family", "poisson", "--data", "adverse-events", "--psi", "diff"],
        vec!["test", "--family", "poisson", "--data", "adverse-events", "--test", "partial"],
        vec!["test", "--family", "normal", "--data", "platelet", "--beta", "-1"],
        vec!["robust-curve", "--family", "normal", "--curve", "if2", "--theta0", "0", "--grid", "1:0:1"],
    ] {
        let out = rts(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?} printed output");
    }
}

#[test]
fn malformed_csv_reports_the_cell() {
    let path = tmp("bad.csv");
    std::fs::write(&path, "a,b\n1,2\n3,x\n").unwrap();
    let out = rts(&["estimate", "--family", "normal", "--data", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("column 2"), "{err}");
}

#[test]
fn bundled_datasets_have_the_expected_shapes() {
    for (name, fam, n, m) in [
        ("adverse-events", "poisson", 19, 19),
        ("platelet", "normal", 12, 7),
        ("lifetimes", "exponential", 12, 12),
    ] {
        let v = json(&["test", "--family", fam, "--data", name]);
        assert_eq!(v["payload"]["n"], n);
        assert_eq!(v["payload"]["m"], m);
        let one = json(&["estimate", "--family", fam, "--data", name, "--drop-rows", "2", "--drop-from", "sample2"]);
        assert_eq!(one["payload"][0]["fit1"]["n"], n);
        assert_eq!(one["payload"][0]["fit2"]["n"], m - 1);
    }
    let ds = robust_wald::data::load("adverse-events", None).unwrap();
    assert_eq!(ds.sample1[0], 91.0);
    let ds = robust_wald::data::load("platelet", None).unwrap();
    assert_eq!(ds.sample2[0], 12.0);
    let ds = robust_wald::data::load("lifetimes", None).unwrap();
    assert_eq!(ds.sample1[0], 0.044);
}

#[test]
fn auto_beta_on_lifetimes_with_an_outlier() {
    let v = json(&["test", "--family", "exponential", "--data", "lifetimes", "--append", "20", "--append-to", "sample2", "--beta", "auto"]);
    let p = &v["payload"];
    let beta = p["selection"]["beta"].as_f64().unwrap();
    assert!(beta > 0.0);
    assert_eq!(p["result"]["beta"].as_f64().unwrap(), beta);
    assert_eq!(p["result"]["reject"], false);
}

#[test]
fn emitted_records_round_trip() {
    for args in [
        vec!["power", "--table2"],
        vec!["test", "--family", "normal", "--test", "partial", "--data", "platelet", "--beta", "0.3"],
        vec!["select-beta", "--family", "poisson", "--data", "adverse-events"],
    ] {
        let mut full = args.clone();
        full.extend(["--json", "-"]);
        let out = rts(&full);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let rec = RunRecord::from_json(text.trim_end()).unwrap();
        assert_eq!(rec.to_json(), text.trim_end());
        assert!(rec.timestamp.is_none());
    }
    let v = json(&["power", "--table1", "--timestamp"]);
    assert!(v["timestamp"].as_u64().is_some());
}

#[test]
fn if2_curve_peaks_at_the_sensitivity() {
    let theta0 = -std::f64::consts::SQRT_2;
    let t = theta0.to_string();
    let out = rts(&["robust-curve", "--family", "normal-known-sigma", "--curve", "if2", "--pattern", "s1", "--beta", "0.5", "--theta0", &t]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let max = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);
    let f = NormalKnownVar::new(1.0).unwrap();
    let ges = gross_error_sensitivity(&f, TestKind::Simple, &NullPoint::common(&[theta0]), 0.5, 0.5, Which::First).unwrap();
    assert!((max - ges.value).abs() < 1e-6, "{max} vs {}", ges.value);
}

#[test]
fn two_sample_curves_and_files() {
    let path = tmp("both.csv");
    let out = rts(&[
        "robust-curve", "--family", "normal-known-sigma", "--curve", "pif", "--pattern", "both", "--theta0", "0",
        "--delta1", "2", "--grid", "-1:1:0.5", "--ygrid", "0:1:1", "--beta", "0.3", "--out", &path,
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,value");
    assert_eq!(lines.len(), 1 + 5 * 2);
    let ges = rts(&["robust-curve", "--family", "poisson", "--curve", "ges", "--theta0", "3", "--grid", "0:1:0.5"]);
    let text = String::from_utf8(ges.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "beta,value");
    assert_eq!(rows.len(), 4);
}

#[test]
fn power_modes() {
    let fixed = json(&["power", "--family", "normal-known-sigma", "--theta1", "0", "--theta2", "0.5", "--n", "50", "--m", "50", "--beta", "0", "--beta", "0.5"]);
    let pts = fixed["payload"]["points"].as_array().unwrap().clone();
    assert_eq!(pts.len(), 2);
    assert!(pts[0]["value"].as_f64().unwrap() > pts[1]["value"].as_f64().unwrap());
    let plan = json(&["power", "--family", "poisson", "--theta1", "3", "--theta2", "4", "--target", "0.8"]);
    let n = plan["payload"]["points"][0]["value"].as_f64().unwrap();
    assert!(n > 10.0 && n.fract() == 0.0);
    let local = json(&["power", "--family", "normal-known-sigma", "--test", "one-sided", "--theta1", "0", "--delta2", "2.828"]);
    let v = local["payload"]["points"][0]["value"].as_f64().unwrap();
    assert!((v - 0.639).abs() < 2e-3, "{v}");
}

#[test]
fn simulate_writes_identical_files() {
    let cfg = tmp("sim.toml");
    std::fs::write(
        &cfg,
        "family = { name = \"poisson\" }\ntest = \"one-sided\"\ntheta1 = [3.0]\ntheta2 = [3.0]\nn = 20\nm = 25\nreplicates = 60\nbetas = [0.0, 0.5]\nseed = 9\n\n[[contamination]]\nepsilon = 0.1\ntheta_c = [12.0]\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    let (j, c) = (tmp("sim.json"), tmp("sim.csv"));
    for _ in 0..2 {
        let out = rts(&["simulate", "--config", &cfg, "--json", &j, "--csv", &c]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read_to_string(&j).unwrap(), std::fs::read_to_string(&c).unwrap()));
        std::fs::remove_file(&j).unwrap();
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].1.starts_with("beta,epsilon,"));
    assert_eq!(outputs[0].1.lines().count(), 3);
    let bad = tmp("bad.toml");
    std::fs::write(&bad, "family = { name = \"poisson\" }\nunknown = 1\n").unwrap();
    assert_eq!(rts(&["simulate", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn variance_ratio_needs_the_full_normal() {
    let ok = rts(&["test", "--family", "normal", "--test", "composite", "--psi", "var-ratio:1", "--data", "platelet"]);
    assert!(ok.status.success());
    let bad = rts(&["test", "--family", "poisson", "--test", "composite", "--psi", "var-ratio:1", "--data", "adverse-events"]);
    assert_eq!(bad.status.code(), Some(2));
    let one = rts(&["test", "--family", "normal", "--test", "one-sided", "--psi", "var-ratio:1", "--direction", "first-larger", "--data", "platelet"]);
    assert!(one.status.success());
}

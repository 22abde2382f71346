use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const VERBS: [&str; 11] = [
    "pdf",
    "sample",
    "fit",
    "profile",
    "quantile",
    "conditional",
    "moment",
    "kl",
    "gof",
    "study",
    "summarize",
];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn swiss() -> String {
    root().join("data/swiss.csv").display().to_string()
}

fn egse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egse")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = egse(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn error_of(out: &Output) -> Value {
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["schema_version"], 1);
    err["error"].clone()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const THETA: &str = r#"{"mu":[0.2,-0.1],"sigma1":0.9,"sigma2":1.2,"rho":0.3,"lambda":[1.0,-0.5],"tau":0.2}"#;

#[test]
fn help_matches_golden_files() {
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for verb in std::iter::once("egse").chain(VERBS) {
        let args: Vec<&str> = if verb == "egse" { vec!["--help"] } else { vec![verb, "--help"] };
        let text = ok(&args);
        let path = golden.join(format!("{verb}.txt"));
        if update {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else {
            let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            assert_eq!(text, expected, "help for {verb} changed; rerun with UPDATE_GOLDEN=1");
        }
    }
}

#[test]
fn summarize_reports_swiss_table() {
    let v = json(&["summarize", "--data", &swiss(), "--cols", "education,agriculture"]);
    assert_eq!(v["schema_version"], 1);
    let edu = &v["columns"][0];
    assert_eq!(edu["name"], "education");
    assert_eq!(edu["n"], 47);
    assert!((edu["skewness"].as_f64().unwrap() - 2.33).abs() < 0.2);
    assert!((edu["kurtosis"].as_f64().unwrap() - 6.54).abs() < 0.2);
    assert!((v["columns"][1]["cv"].as_f64().unwrap() - 44.83).abs() < 0.5);
}

#[test]
fn fit_then_gof_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let fit_path = dir.path().join("fit.json").display().to_string();
    let swiss = swiss();
    ok(&[
        "fit", "--data", &swiss, "--cols", "education,agriculture", "--link", "logit,logit", "--generator", "normal",
        "--tau", "0", "--seed", "1", "--out", &fit_path,
    ]);
    let text = std::fs::read_to_string(&fit_path).unwrap();
    let fit: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(fit["schema_version"], 1);
    assert_eq!(fit["converged"], true);
    assert!(fit["loglik"].as_f64().unwrap() > 82.382);
    assert!(text.contains("\"loglik\": 8.5635"), "17-digit output expected");
    for key in ["theta", "psi", "se", "iterations"] {
        assert!(!fit[key].is_null(), "{key}");
    }

    let qq = dir.path().join("qq.csv").display().to_string();
    let gof = json(&["gof", "--fit", &fit_path, "--data", &swiss, "--qq", &qq]);
    assert!(gof["ks_pvalue"].as_f64().unwrap() > 0.05);
    assert!(gof["ad_pvalue"].as_f64().unwrap() > 0.01);
    assert_eq!(gof["residuals"].as_array().unwrap().len(), 94);
    let qq_text = std::fs::read_to_string(&qq).unwrap();
    assert!(qq_text.starts_with("theoretical,sample\n"));
    assert_eq!(qq_text.lines().count(), 95);

    let pdf = ok(&["pdf", "--theta", &fit_path, "--link", "logit,logit", "--data", &swiss, "--cols", "education,agriculture"]);
    let total: f64 = pdf.lines().skip(1).map(|l| l.parse::<f64>().unwrap()).sum();
    assert!((total - fit["loglik"].as_f64().unwrap()).abs() < 1e-8);
}

#[test]
fn profile_records_the_grid() {
    let v = json(&[
        "profile", "--data", &swiss(), "--cols", "education,agriculture", "--link", "logit,logit", "--tau", "0",
        "--nu-min", "3", "--nu-max", "6",
    ]);
    let grid: Vec<f64> = v["nu_profile"].as_array().unwrap().iter().map(|p| p["nu"].as_f64().unwrap()).collect();
    assert_eq!(grid, vec![3.0, 4.0, 5.0, 6.0]);
    assert!(v["theta"]["nu"].as_f64().is_some());
}

#[test]
fn pdf_outside_domain_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let theta = write(dir.path(), "t.json", THETA);
    let points = write(dir.path(), "p.csv", "a,b\n0.2,0.3\n0.5,1.5\n");
    let out = egse(&["pdf", "--theta", &theta, "--link", "logit,logit", "--data", &points]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_of(&out);
    assert_eq!(err["kind"], "domain");
    let msg = err["message"].as_str().unwrap();
    assert!(msg.contains("row 2") && msg.contains("column 2"), "{msg}");
}

#[test]
fn sample_is_reproducible_and_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let theta = write(dir.path(), "t.json", THETA);
    let args = ["sample", "--theta", &theta, "--link", "logit,cloglog", "--generator", "student:5", "-m", "500", "--seed", "42"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.starts_with("y1,y2\n"));
    assert_eq!(a.lines().count(), 501);
    let mut other = args;
    other[10] = "43";
    assert_ne!(a, ok(&other));
    let single = Command::new(env!("CARGO_BIN_EXE_egse")).args(args).env("EGSE_THREADS", "1").output().unwrap();
    assert_eq!(String::from_utf8(single.stdout).unwrap(), a);

    let out = egse(&["sample", "--theta", &theta, "--link", "logit,logit", "-m", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "usage");
}

#[test]
fn usage_errors_exit_two() {
    for args in [vec!["frobnicate"], vec!["quantile", "-p", "0.5"], vec!["sample", "-m", "ten"]] {
        let out = egse(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_of(&out)["kind"], "usage");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_egse")).args(["summarize", "--data", &swiss()]).env("EGSE_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let out = egse(&["quantile", "--theta", "/nonexistent/t.json", "--link", "logit", "-i", "1", "-p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_of(&out)["message"].as_str().unwrap().contains("/nonexistent/t.json"));
}

#[test]
fn quantile_of_symmetric_logit_model() {
    let dir = tempfile::tempdir().unwrap();
    let theta = write(dir.path(), "t.json", r#"{"mu":[0],"sigma1":1}"#);
    let v = json(&["quantile", "--theta", &theta, "--link", "logit", "-i", "1", "-p", "0.975"]);
    assert!((v["quantile"].as_f64().unwrap() - 0.876522).abs() < 1e-5);
    let out = egse(&["quantile", "--theta", &theta, "--link", "logit", "-i", "2", "-p", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn conditional_emits_a_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let theta = write(dir.path(), "t.json", THETA);
    let csv = ok(&["conditional", "--theta", &theta, "--link", "logit,logit", "--kappa", "0.3", "-i", "1", "-j", "2", "--points", "400"]);
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (y, p) = l.split_once(',').unwrap();
            (y.parse().unwrap(), p.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 400);
    let mass: f64 = rows.iter().map(|r| r.1).sum::<f64>() / 400.0;
    assert!((mass - 1.0).abs() < 1e-2, "{mass}");
}

#[test]
fn moments_closed_form_and_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let sym = write(dir.path(), "s.json", r#"{"mu":[0.1,0.2],"sigma1":0.5,"sigma2":0.4,"rho":0.0}"#);
    let v = json(&["moment", "--theta", &sym, "--link", "log,log", "--m", "1,2"]);
    let exact = (0.1f64 + 0.4 + 0.5 * (0.25 + 4.0 * 0.16)).exp();
    assert!((v["estimate"].as_f64().unwrap() - exact).abs() < 1e-12 * exact);
    assert_eq!(v["method"], "closed_form_log_link");

    let mc = json(&["moment", "--theta", &sym, "--link", "log,log", "--m", "1,2", "--estimator", "mc", "--seed", "5"]);
    let (est, se) = (mc["estimate"].as_f64().unwrap(), mc["stderr"].as_f64().unwrap());
    assert!((est - exact).abs() < 4.0 * se, "{est} ± {se} vs {exact}");

    let out = egse(&["moment", "--theta", &sym, "--link", "logit,logit", "--m", "1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn kl_between_unit_normals() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"mu":[0],"sigma1":1}"#);
    let b = write(dir.path(), "b.json", r#"{"mu":[1],"sigma1":1}"#);
    let v = json(&["kl", "--theta1", &a, "--theta2", &b, "--seed", "11", "--mc-size", "200000"]);
    let (est, se) = (v["estimate"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((est - 0.5).abs() < 3.0 * se, "{est} ± {se}");
}

#[test]
fn study_writes_a_reproducible_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "study.json", r#"{"sample_sizes":[100],"rho_values":[0.5],"replications":2,"base_seed":7}"#);
    let out = dir.path().join("report.csv").display().to_string();
    ok(&["study", "--config", &config, "--out", &out]);
    let first = std::fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("size,rho,param,rb,rmse,failures\n"));
    assert_eq!(first.lines().count(), 9);
    assert_eq!(first, ok(&["study", "--config", &config]));
}

use std::path::Path;
use std::process::{Command, Output};

use pantolab::series::deformed_exp_eval;
use pantolab::PrecCtx;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pantolab"));
    c.env_remove("PANTOLAB_BITS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn data_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn series_single_point_matches_library() {
    let out = run(&["eval", "--method", "series", "--lambda", "0.5", "--z", "1"]);
    assert!(out.status.success());
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 2, "{lines:?}");
    assert_eq!(lines[0], "z_re,z_im,value_re,value_im,est_error");
    let c = PrecCtx::default();
    let want = deformed_exp_eval(&c.real(0.5), &c.complex((1, 0)), &c).unwrap().value.real().to_f64();
    let got: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(got, want);
}

#[test]
fn contour_crosscheck_reports_max_rel_dev() {
    let out = run(&[
        "eval", "--method", "contour", "--lambda", "0.5", "--z", "1", "--z", "5+2i", "--z", "-3", "--z", "10", "--crosscheck",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let dev = v["summary"]["crosscheck"]["max_rel_dev"].as_f64().unwrap();
    assert!(dev <= 1e-15, "{dev}");
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn truncated_expansion_crosscheck() {
    let out = run(&["eval", "--lambda", "0.6", "--a", "3", "--b", "-2", "--grid", "-5:5:7", "--crosscheck", "--format", "json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["summary"]["crosscheck"]["reference"], "truncated-expansion");
    assert!(v["summary"]["crosscheck"]["max_rel_dev"].as_f64().unwrap() <= 1e-20);
}

#[test]
fn lambda_out_of_range_is_invalid_input() {
    let out = run(&["eval", "--lambda", "1.2", "--z", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["message"].as_str().unwrap().contains("lambda out of (0,1)"));
    assert_eq!(err["error"]["kind"], "invalid-input");
}

#[test]
fn contour_needs_b_zero() {
    let out = run(&["eval", "--method", "contour", "--b", "1", "--z", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analytic_zeros_with_reports() {
    let out = run(&["zeros", "--lambda", "0.5", "--count", "20", "--analytic", "--format", "json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(v["columns"], serde_json::json!(["n", "x_n", "enclosure", "ratio", "normalized_ratio"]));
    for key in ["ratio_check", "gamma_fit", "robinson_check", "zhang_check"] {
        assert!(v["reports"][key].is_object(), "{key}");
    }
    assert_eq!(v["reports"]["ratio_check"]["pass"], true);
    assert!(v["reports"]["gamma_fit"]["gamma"].as_f64().unwrap() > 0.0);
    let last = rows.last().unwrap();
    assert!((last[4].as_f64().unwrap() - 1.0).abs() < 0.125);
}

#[test]
fn zeros_from_initial_function_file() {
    let dir = tempfile::tempdir().unwrap();
    let phi = write(
        dir.path(),
        "phi.json",
        r#"{"x0": 1, "kind": "table", "x": [0.5, 0.6, 0.75, 0.9, 1], "y": [0.3, -0.8, 0.1, 0.9, -0.4]}"#,
    );
    let out = run(&["zeros", "--init-file", &phi, "--count", "15", "--bits", "128", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(v["rows"].as_array().unwrap().len() >= 12);
    assert!(v["reports"]["gamma_fit"]["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn zero_count_gives_empty_table() {
    let out = run(&["zeros", "--count", "0"]);
    assert!(out.status.success());
    assert_eq!(data_lines(&out), ["n,x_n,enclosure,ratio,normalized_ratio"]);
}

#[test]
fn analytic_seed_roundtrip() {
    let out = run(&["solve", "--analytic", "--x-max", "50", "--samples", "25", "--compare-series", "--format", "json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert!(v["summary"]["series_comparison"]["max_rel_dev"].as_f64().unwrap() < 1e-12);
    assert!(v["summary"]["residual"]["max_rel"].as_f64().unwrap() < 1e-20);
}

#[test]
fn exponential_when_a_is_zero() {
    let out = run(&["solve", "--a", "0", "--b", "1", "--x-max", "20", "--samples", "11", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    for row in v["rows"].as_array().unwrap() {
        let x = row[0].as_f64().unwrap();
        let y = row[1].as_f64().unwrap();
        assert!((y / x.exp() - 1.0).abs() < 1e-14, "{x} {y}");
    }
}

#[test]
fn discontinuous_initial_function_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let phi = write(
        dir.path(),
        "phi.json",
        r#"{"x0": 1, "kind": "pieces", "breaks": [0.5, 0.75, 1], "coeffs": [[1, -8], [0, 6]]}"#,
    );
    let out = run(&["solve", "--init-file", &phi]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("discontinuous"));
}

#[test]
fn lemma_check_passes() {
    let out = run(&["verify-lemma", "--lambda", "0.5", "--x0", "0.25", "--format", "json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["report"]["pass"], true);
    assert_eq!(v["rows"].as_array().unwrap().len(), 96);
}

#[test]
fn lemma_check_failure_exits_one() {
    // a bound ten times too tight cannot hold at k = 5
    let out = run(&["verify-lemma", "--bound-m", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn growth_probe_second_order() {
    let out = run(&["verify-growth", "--order", "2", "--term", "0:1:0.5", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json_of(&out);
    let env = &v["report"]["envelope"];
    assert!(env["gamma_hat"].as_f64().unwrap() >= env["thresholds"][0].as_f64().unwrap());
}

#[test]
fn polynomial_condition_synthetic() {
    let args = ["verify-growth", "--order", "1", "--term", "0:1:0.5", "--term", "0:-2:0.25", "--envelope", "false"];
    let out = run(&[&args[..], &["--expect-degrees", "1"]].concat());
    assert!(out.status.success());
    let out = run(&[&args[..], &["--expect-degrees", "2"]].concat());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_rereads_zero_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("z.csv");
    let out = run(&["zeros", "--count", "20", "--digits", "40", "-o", table.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["fit", "--zeros-file", table.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["config"]["column"], "x_n_text");
    assert_eq!(v["summary"]["zeros"], 20);
    assert!(v["reports"]["gamma_fit"]["gamma"].as_f64().unwrap() > 0.0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["zeros", "--random-pieces", "6", "--seed", "11", "--count", "12", "--bits", "128", "--format", "json"];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "2"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "lambda = 0.3\nbits = 128\nz = [1, \"2+1i\"]\nmethod = \"series\"\n");
    let out = run(&["eval", "--config", &cfg, "--lambda", "0.5", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["config"]["lambda"], "0.5");
    assert_eq!(v["config"]["bits"], 128);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["version"]["pantolab"], pantolab::VERSION);

    let bad = write(dir.path(), "bad.toml", "lamda = 0.3\n");
    assert_eq!(run(&["eval", "--config", &bad, "--z", "1"]).status.code(), Some(2));
}

#[test]
fn precision_from_environment() {
    let out = bin().args(["eval", "--z", "1", "--format", "json"]).env("PANTOLAB_BITS", "160").output().unwrap();
    assert_eq!(json_of(&out)["config"]["bits"], 160);
    let out = bin()
        .args(["eval", "--z", "1", "--bits", "192", "--format", "json"])
        .env("PANTOLAB_BITS", "160")
        .output()
        .unwrap();
    assert_eq!(json_of(&out)["config"]["bits"], 192);
}

#[test]
fn csv_embeds_config_and_version() {
    let out = run(&["eval", "--z", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# config: {")));
    assert!(text.lines().any(|l| l.starts_with("# version: {")));
}

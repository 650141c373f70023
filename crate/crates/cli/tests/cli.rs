use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levy-groups"))
        .args(args)
        .env_remove("LEVY_GROUPS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn validate(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}");
}

#[test]
fn coeffs_so3_alpha2_in_all_columns() {
    let o = run(&["coeffs", "--group", "so3", "--lmax", "4", "--samples", "200000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("l,closed,quadrature,monte_carlo,mc_stderr"));
    let row: Vec<f64> = out
        .lines()
        .find(|l| l.starts_with("2,"))
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    let exact = 2.0 / (9.0 * std::f64::consts::PI);
    assert!((row[1] - exact).abs() < 1e-12);
    assert!((row[2] - exact).abs() < 1e-9);
    assert!((row[3] - exact).abs() < 4.0 * row[4], "mc {} ± {}", row[3], row[4]);
    assert_eq!(format!("{:.7}", row[1]), "0.0707355");
}

#[test]
fn witness_son4_is_positive() {
    let o = run(&["witness", "--group", "son", "--n", "4", "--points", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("witness", &doc);
    assert_eq!(doc["group"], "SO(4)");
    assert!(doc["value"].as_f64().unwrap() > 0.0);
    let cert = levy_groups_cert(&stdout(&o));
    assert!(cert > 0.0);
}

fn levy_groups_cert(json: &str) -> f64 {
    let doc: Value = serde_json::from_str(json).unwrap();
    let w: Vec<f64> = doc["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(w.iter().sum::<f64>().abs() < 1e-12);
    doc["value"].as_f64().unwrap()
}

#[test]
fn check_su2_is_definite() {
    let o = run(&["check", "--group", "su2", "--points", "200", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("check", &doc);
    assert!(doc["max_centered_eig"].as_f64().unwrap() <= 1e-8);
    assert_eq!(doc["kernel_psd"], true);
}

#[test]
fn check_so3_reports_negative_finding() {
    let o = run(&["check", "--group", "so3", "--points", "100", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not positive semidefinite"));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("check", &doc);
    assert_eq!(doc["restricted_negative_definite"], false);
}

#[test]
fn witness_su2_not_found_exits_one() {
    let o = run(&["witness", "--group", "su2", "--points", "30", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("no witness"));
}

#[test]
fn simulate_so3_refuses() {
    let o = run(&["simulate", "--group", "so3", "--points", "30", "--realizations", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
}

#[test]
fn invalid_arguments_exit_two_and_name_the_flag() {
    for (args, flag) in [
        (vec!["coeffs", "--lmax", "x"], "--lmax"),
        (vec!["witness", "--format", "csv"], "--format"),
        (vec!["haar", "--group", "son"], "--n"),
        (vec!["check", "--group", "su3"], "--group"),
        (vec!["check", "--points", "0"], "--points"),
        (vec!["coeffs", "--tol", "-1"], "--tol"),
        (vec!["simulate", "--seed", "abc"], "--seed"),
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn reruns_are_byte_identical_without_meta() {
    let cases: [&[&str]; 6] = [
        &["coeffs", "--group", "su2", "--lmax", "6", "--samples", "20000", "--format", "json", "--no-meta"],
        &["densities", "--group", "so3", "--points", "8", "--samples", "5000", "--format", "json", "--no-meta"],
        &["check", "--group", "son", "--n", "5", "--points", "40", "--seed", "3", "--no-meta"],
        &["witness", "--group", "so3", "--points", "60", "--seed", "11"],
        &["simulate", "--group", "su2", "--points", "12", "--realizations", "200", "--format", "json", "--no-meta"],
        &["haar", "--group", "son", "--n", "5", "--points", "4", "--format", "json", "--no-meta"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let doc: Value = serde_json::from_str(&stdout(&a)).unwrap();
        assert!(doc.get("meta").is_none());
        let schema = args[0];
        validate(schema, &doc);
    }
}

#[test]
fn meta_is_present_by_default_and_validates() {
    let o = run(&["haar", "--group", "su2", "--points", "3", "--format", "json"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("haar", &doc);
    assert!(doc["meta"]["tool_version"].is_string());
}

#[test]
fn thread_width_does_not_change_output_for_fixed_width() {
    let base = ["coeffs", "--group", "so3", "--lmax", "3", "--samples", "20000", "--threads", "4"];
    let a = run(&base);
    let o = Command::new(env!("CARGO_BIN_EXE_levy-groups"))
        .args(&base[..7])
        .env("LEVY_GROUPS_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(a.stdout, o.stdout);
}

#[test]
fn values_round_trip_through_binary_file() {
    let dir = std::env::temp_dir().join(format!("levy-groups-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("values.bin");
    let o = run(&[
        "simulate", "--group", "su2", "--points", "10", "--realizations", "100",
        "--values-out", path.to_str().unwrap(), "--values-format", "bin",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let values = levy_groups::field_sim::read_values_binary(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(values.ncols(), 100);
    assert!(values.row(0).iter().all(|&v| v == 0.0));
    std::fs::remove_dir_all(&dir).ok();
}

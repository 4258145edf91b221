use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn formkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formkit")).args(args).output().expect("binary runs")
}

fn formkit_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formkit"))
        .args(args)
        .env("FORMKIT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> &Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&ok(out).stdout).expect("valid JSON")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Simulated five-point landmarks converted to coordinates.
fn five_point_coords(dir: &TempDir, name: &str, n: usize, seed: u64, extra: &[&str]) -> PathBuf {
    let raw = path(dir, &format!("{name}_raw.csv"));
    let coords = path(dir, &format!("{name}.csv"));
    let n = n.to_string();
    let seed = seed.to_string();
    let mut args = vec!["simulate", "five-point", "--n", &n, "--seed", &seed, "-o", s(&raw)];
    args.extend(extra);
    ok(&formkit(&args));
    ok(&formkit(&["coords", s(&raw), "-o", s(&coords)]));
    coords
}

fn read_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn five_point_generator_roundtrip() {
    let dir = TempDir::new().unwrap();
    let coords = five_point_coords(&dir, "w", 400, 3, &[]);
    let rows = read_rows(&coords);
    assert_eq!(rows[0], ["id", "d1", "d2", "alpha", "theta1", "phi1", "theta2", "phi2"]);
    assert_eq!(rows.len(), 401);
    let mut sums = [0.0; 3];
    for r in &rows[1..] {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[0] > 0.0 && v[1] > 0.0 && v[2] > 0.0 && v[2] < std::f64::consts::PI);
        assert!((0.0..=std::f64::consts::PI).contains(&v[3]) && (0.0..=std::f64::consts::PI).contains(&v[5]));
        for j in 0..3 {
            sums[j] += v[j];
        }
    }
    // generator means recovered through landmarks and back
    for (j, want) in [4.77, 5.54, 1.06].iter().enumerate() {
        assert!((sums[j] / 400.0 - want).abs() < 0.03, "{j}");
    }
}

#[test]
fn collinear_record_is_skipped() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.csv");
    let header = "id,l1_x,l1_y,l1_z,l2_x,l2_y,l2_z,l3_x,l3_y,l3_z,l4_x,l4_y,l4_z,l5_x,l5_y,l5_z";
    let good = "a,1.2,0.3,-0.4,0.9,1.1,0.2,0,0,0,1.4,-0.8,0.5,2.0,-1.0,1.3";
    let flat = "b,1,0,0,2,0,0,0,0,0,3,0,0,4,0,0";
    fs::write(&input, format!("{header}\n{good}\n{flat}\n")).unwrap();
    let out = ok(&formkit(&["coords", s(&input)])).clone();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("a,"));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("record 'b' skipped") && err.contains(":3:"), "{err}");
    assert!(err.contains("skipped 1 of 2"));
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "empty.csv");
    fs::write(&input, "").unwrap();
    let out = formkit(&["coords", s(&input)]);
    assert!(ok(&out).stdout.is_empty());
}

#[test]
fn generic_simplex_coordinates() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.csv");
    fs::write(&input, "id,l1_x,l1_y,l2_x,l2_y,l3_x,l3_y,l4_x,l4_y\np,0,0,2,0,1,1.5,3,2\n").unwrap();
    for t in ["1", "2"] {
        let out = formkit(&["coords", s(&input), "--scheme", "gm-type1", "--dim", "2", "--type", t]);
        let text = String::from_utf8(ok(&out).stdout.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "id,h1,s1,s2,zeta1_1,zeta1_2,zeta2_1,zeta2_2");
        let v: Vec<f64> = lines.next().unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 7);
        assert!(v[0] > 0.0);
        // unit directions
        assert!((v[3].hypot(v[4]) - 1.0).abs() < 1e-12 && (v[5].hypot(v[6]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn stats_report_matches_calibration() {
    let dir = TempDir::new().unwrap();
    let coords = five_point_coords(&dir, "w", 146, 11, &[]);
    let r = json(&formkit(&["stats", s(&coords)]));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["n"], 146);
    let r1 = r["spherical"][0]["resultant"].as_f64().unwrap();
    let r2 = r["spherical"][1]["resultant"].as_f64().unwrap();
    assert!((r1 - 0.960).abs() < 0.01 && (r2 - 0.973).abs() < 0.01, "{r1} {r2}");
    let pct: f64 = r["pca"]["percentages"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((pct - 100.0).abs() < 1e-10);
    // φ₂ centred near 0.20 even though raw angles wrap at 2π
    assert!((r["mean"][6].as_f64().unwrap() - 0.20).abs() < 0.1);
    assert_eq!(r["tangent"]["covariance"].as_array().unwrap().len(), 7);
}

#[test]
fn identical_records_surface_correlation_error() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "same.csv");
    let row = "4.7,5.5,1.0,1.1,0.6,1.5,0.2";
    let body: String = (0..10).map(|i| format!("r{i},{row}\n")).collect();
    fs::write(&input, format!("id,d1,d2,alpha,theta1,phi1,theta2,phi2\n{body}")).unwrap();
    let r = json(&formkit(&["stats", s(&input)]));
    assert!(r["variances"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap().abs() < 1e-20));
    assert!(r["tangent"]["correlation"].is_null());
    assert!(r["warnings"][0].as_str().unwrap().contains("zero variance"));

    let one = path(&dir, "one.csv");
    fs::write(&one, format!("id,d1,d2,alpha,theta1,phi1,theta2,phi2\na,{row}\n")).unwrap();
    assert_eq!(formkit(&["stats", s(&one)]).status.code(), Some(2));
    // zero pooled covariance is a numeric failure
    assert_eq!(formkit(&["test", s(&input), s(&input)]).status.code(), Some(3));
}

#[test]
fn injected_hotelling_chain() {
    let r = json(&formkit(&["test", "--d2", "443.4", "--n1", "146", "--n2", "44", "--p", "7"]));
    let f = r["f"].as_f64().unwrap();
    assert!((f / 2073.0 - 1.0).abs() < 0.01, "{f}");
    assert_eq!(r["dof"], serde_json::json!([7, 182]));
    let t2 = r["t2"].as_f64().unwrap();
    assert!((t2 - 146.0 * 44.0 / 190.0 * 443.4).abs() < 1e-9);
}

#[test]
fn two_sample_tests() {
    let dir = TempDir::new().unwrap();
    let a = five_point_coords(&dir, "a", 80, 1, &[]);
    let b = five_point_coords(&dir, "b", 60, 2, &["--param", "phi2=0.9", "--param", "d2=5.9"]);
    let same = json(&formkit(&["test", s(&a), s(&a)]));
    assert_eq!(same["p_value"].as_f64().unwrap(), 1.0);
    let sep = json(&formkit(&["test", s(&a), s(&b)]));
    assert!(sep["p_value"].as_f64().unwrap() < 1e-12);
    assert!(sep["d2"].as_f64().unwrap() > 5.0);
    assert_eq!(sep["dof"], serde_json::json!([7, 132]));
    assert_eq!(formkit(&["test", s(&a)]).status.code(), Some(1));
}

#[test]
fn modehunt_end_to_end() {
    let dir = TempDir::new().unwrap();
    let mix = path(&dir, "mix.csv");
    ok(&formkit(&["simulate", "wn-mixture", "--n", "60", "--seed", "5", "-o", s(&mix)]));
    let labels = path(&dir, "labels.csv");
    let r = json(&formkit(&["modehunt", s(&mix), "--labels", s(&labels)]));
    assert_eq!(r["tree"]["decision"], "split");
    assert!(r["tree"]["p_value"].as_f64().unwrap() < 1e-6);
    let rows = read_rows(&labels);
    assert_eq!(rows[0], ["id", "angle", "component", "label"]);
    assert_eq!(rows.len(), 61);
    // the two simulated components never share a leaf
    let mut seen = std::collections::HashMap::new();
    for r in &rows[1..] {
        let prev = seen.insert(r[3].clone(), r[2].clone());
        assert!(prev.is_none() || prev.as_ref() == Some(&r[2]));
    }

    let uni = path(&dir, "uni.csv");
    ok(&formkit(&[
        "simulate", "wn-mixture", "--n", "100", "--seed", "2", "--param", "mu2=0", "--param", "sigma1=0.2", "--param",
        "sigma2=0.2", "-o", s(&uni),
    ]));
    let r = json(&formkit(&["modehunt", s(&uni)]));
    assert_eq!(r["leaves"], 1);

    let two = path(&dir, "two.csv");
    fs::write(&two, "angle\n0.1\n3.0\n").unwrap();
    let r = json(&formkit(&["modehunt", s(&two)]));
    assert_eq!(r["leaves"], 1);
    assert_eq!(r["tree"]["decision"], "too_small");
}

#[test]
fn degrees_flag_matches_radians() {
    let dir = TempDir::new().unwrap();
    let rad = path(&dir, "rad.csv");
    let deg = path(&dir, "deg.csv");
    let angles = [0.01, -0.02, 0.015, 3.15, 3.13, 3.16, 0.03, 3.12];
    let body = |f: &dyn Fn(f64) -> f64| angles.iter().map(|a| format!("{}\n", f(*a))).collect::<String>();
    fs::write(&rad, format!("angle\n{}", body(&|a| a))).unwrap();
    fs::write(&deg, format!("angle\n{}", body(&|a: f64| a.to_degrees()))).unwrap();
    let a = json(&formkit(&["modehunt", s(&rad)]));
    let b = json(&formkit(&["modehunt", s(&deg), "--degrees"]));
    assert_eq!(a["leaves"], b["leaves"]);
    assert_eq!(a["tree"]["children"][0]["indices"], b["tree"]["children"][0]["indices"]);
}

#[test]
fn fitdist_recovers_parameters() {
    let dir = TempDir::new().unwrap();
    let cone = path(&dir, "cone.csv");
    ok(&formkit(&[
        "simulate", "cone", "--n", "20000", "--seed", "4", "--param", "kappa1=1.5", "--param", "kappa3=2", "--param",
        "mu=1", "-o", s(&cone),
    ]));
    let r = json(&formkit(&["fitdist", s(&cone), "--model", "cone"]));
    assert!((r["kappa1"].as_f64().unwrap() / 1.5 - 1.0).abs() < 0.1);
    assert!((r["kappa3"].as_f64().unwrap() / 2.0 - 1.0).abs() < 0.1);
    assert!((r["mu"].as_f64().unwrap() - 1.0).abs() < 0.05);

    let fisher = path(&dir, "fisher.csv");
    ok(&formkit(&["simulate", "fisher", "--n", "3000", "--param", "kappa=10", "-o", s(&fisher)]));
    let r = json(&formkit(&["fitdist", s(&fisher), "--model", "fisher"]));
    assert!((r["kappa"].as_f64().unwrap() / 10.0 - 1.0).abs() < 0.1);
}

#[test]
fn fixed_seed_is_byte_identical() {
    for model in ["cone", "fisher", "five-point", "wn-mixture"] {
        let a = formkit(&["simulate", model, "--n", "50", "--seed", "9"]);
        let b = formkit(&["simulate", model, "--n", "50", "--seed", "9"]);
        assert_eq!(ok(&a).stdout, ok(&b).stdout, "{model}");
        let c = formkit(&["simulate", model, "--n", "50", "--seed", "10"]);
        assert_ne!(a.stdout, ok(&c).stdout);
    }
}

#[test]
fn output_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let raw = path(&dir, "raw.csv");
    ok(&formkit(&["simulate", "five-point", "--n", "300", "--seed", "6", "-o", s(&raw)]));
    let one = formkit_env(&["coords", s(&raw)], "1");
    let four = formkit_env(&["coords", s(&raw)], "4");
    assert_eq!(ok(&one).stdout, ok(&four).stdout);
    assert_eq!(formkit_env(&["coords", s(&raw)], "zero").status.code(), Some(1));
}

#[test]
fn errors_carry_context_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "id,d1,d2,alpha,theta1,phi1,theta2,phi2\na,4.7,5.5,1.0,1.1,0.6,1.5,0.2\nb,4.7,oops,1.0,1.1,0.6,1.5,0.2\n")
        .unwrap();
    let out = formkit(&["stats", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.csv:3:3") && err.contains("oops"), "{err}");

    let header = path(&dir, "header.csv");
    fs::write(&header, "id,l1_x,l1_y,l1_q\n").unwrap();
    let out = formkit(&["coords", s(&header)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header.csv:1"));

    assert_eq!(formkit(&["nonsense"]).status.code(), Some(1));
    assert_eq!(formkit(&["simulate", "cone", "--param", "kappa1=-1"]).status.code(), Some(1));
    assert_eq!(formkit(&["simulate", "cone", "--param", "nope=1"]).status.code(), Some(1));
    assert_eq!(formkit(&["stats", "/nonexistent/file.csv"]).status.code(), Some(2));
    assert_eq!(formkit(&["--help"]).status.code(), Some(0));
}

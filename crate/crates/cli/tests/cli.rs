use std::path::{Path, PathBuf};

use fischer_nf::algebra::GaussianRational;
use fischer_nf::normalform::instances::{phi21_family, random_bihomogeneous, random_model_equivalent};
use fischer_nf_cli::run;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["fischer-nf"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn phi21(dir: &Path, t: (i64, i64), d_max: u32) -> PathBuf {
    let t = GaussianRational::new(num::BigRational::new(t.0.into(), t.1.into()), num::BigRational::from_integer(0.into()));
    let path = dir.join(format!("phi21_{d_max}.json"));
    std::fs::write(&path, phi21_family(1, &t, d_max).to_json_string()).unwrap();
    path
}

#[test]
fn help_and_version_exit_zero() {
    let (c, out, _) = call(&["--help"]);
    assert_eq!(c, 0);
    assert!(out.contains("normalize"));
    assert_eq!(call(&["--version"]).0, 0);
    assert_eq!(call(&["audit", "--help"]).0, 0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(call(&[]).0, 2);
    assert_eq!(call(&["bogus"]).0, 2);
    assert_eq!(call(&["normalize", "--manifold", "/nonexistent.json", "--tmax", "4"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let (c, out, err) = call(&["normalize", "--manifold", s(&bad), "--tmax", "4"]);
    assert_eq!(c, 2);
    assert!(out.is_empty());
    assert!(err.starts_with("error:"));
    assert_eq!(call(&["limit-check", "--tol", "0"]).0, 2);
    let m = phi21(dir.path(), (1, 10_000), 8);
    assert_eq!(call(&["audit", "--manifold", s(&m), "--d", "3", "--r", "1", "--rprime", "2"]).0, 2);
}

#[test]
fn normalize_is_deterministic_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let m = phi21(dir.path(), (1, 3), 6);
    let nf = dir.path().join("nf.json");
    let (c1, out1, _) = call(&["normalize", "--manifold", s(&m), "--tmax", "6", "--out", s(&nf)]);
    let first = std::fs::read_to_string(&nf).unwrap();
    let (c2, out2, _) = call(&["normalize", "--manifold", s(&m), "--tmax", "6", "--out", s(&nf)]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(out1, out2);
    assert_eq!(first, std::fs::read_to_string(&nf).unwrap());
    let report: Value = serde_json::from_str(&out1).unwrap();
    assert_eq!(report["status"], "ok");
    assert_eq!(report["command"], "normalize");
    assert_eq!(report["result"]["verification"]["passed"], true);
    assert!(report["config"].get("out").is_none());

    let (c, out, _) = call(&["verify", "--normal-form", s(&nf)]);
    assert_eq!(c, 0, "{out}");
}

#[test]
fn corrupted_normal_form_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let m = phi21(dir.path(), (1, 3), 6);
    let nf = dir.path().join("nf.json");
    assert_eq!(call(&["normalize", "--manifold", s(&m), "--tmax", "6", "--out", s(&nf)]).0, 0);
    let mut j: Value = serde_json::from_str(&std::fs::read_to_string(&nf).unwrap()).unwrap();
    // Rescale one coefficient of φ': the substituted equation no longer vanishes.
    let term = &mut j["normal_form"]["E"][0]["poly"]["terms"][0];
    term["re"] = Value::from("7");
    term["im"] = Value::from("0");
    let bad = dir.path().join("bad_nf.json");
    std::fs::write(&bad, serde_json::to_string(&j).unwrap()).unwrap();
    let (c, out, err) = call(&["verify", "--normal-form", s(&bad)]);
    assert_eq!(c, 1, "{out}{err}");
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["status"], "check_failed");
    assert_eq!(report["result"]["passed"], false);
}

#[test]
fn decompose_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (mode, (m, n)) in [("type1", (3, 2)), ("type2", (1, 3))] {
        let p = random_bihomogeneous(1, m, n, 0.7, &mut rng);
        let path = dir.path().join(format!("{mode}.json"));
        std::fs::write(&path, serde_json::to_string(&p.to_json()).unwrap()).unwrap();
        let (c, out, err) = call(&["decompose", "--poly", s(&path), "--mode", mode]);
        assert_eq!(c, 0, "{err}");
        let r: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(r["result"]["reconstruction"], true);
        assert_eq!(r["result"]["kernel"], true);
        assert_eq!(r["result"]["pythagoras"], true);
    }
}

#[test]
fn theta_step_doubles_the_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scale = GaussianRational::new(num::BigRational::new(1.into(), 10.into()), num::BigRational::from_integer(0.into()));
    let (m, _) = random_model_equivalent(1, 3, 3, 6, 0.5, &scale, &mut rng).unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, m.to_json_string()).unwrap();
    let (c, out, err) = call(&["theta-step", "--manifold", s(&path), "--d", "3"]);
    assert_eq!(c, 0, "{err}");
    let r: Value = serde_json::from_str(&out).unwrap();
    assert!(r["result"]["order"].as_u64().map_or(true, |o| o >= 4));

    // A nonzero normal-form term of weight 3 survives every normalization.
    let phi = phi21(dir.path(), (1, 5), 6);
    let (c, out, _) = call(&["theta-step", "--manifold", s(&phi), "--d", "3"]);
    assert_eq!(c, 1);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["status"], "check_failed");
}

#[test]
fn audit_passes_small_and_refuses_large() {
    let dir = tempfile::tempdir().unwrap();
    let small = phi21(dir.path(), (1, 10_000), 8);
    let args = |m: &Path| {
        let m = s(m).to_string();
        vec!["audit".to_string(), "--manifold".into(), m, "--d".into(), "3".into(), "--samples".into(), "2000".into(), "--points".into(), "16".into()]
    };
    let a = args(&small);
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let (c, out1, err) = call(&a);
    assert_eq!(c, 0, "{err}");
    let (_, out2, _) = call(&a);
    assert_eq!(out1, out2);
    let r: Value = serde_json::from_str(&out1).unwrap();
    assert_eq!(r["seed"], fischer_nf::estimates::DEFAULT_SEED);

    let large_dir = tempfile::tempdir().unwrap();
    let large = phi21(large_dir.path(), (10, 1), 8);
    let a = args(&large);
    let a: Vec<&str> = a.iter().map(String::as_str).collect();
    let (c, out, _) = call(&a);
    assert_eq!(c, 3);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["status"], "refused");
}

#[test]
fn iterate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let scale = GaussianRational::new(num::BigRational::new(1.into(), 10.into()), num::BigRational::from_integer(0.into()));
    let (m, _) = random_model_equivalent(1, 3, 3, 6, 0.5, &scale, &mut rng).unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, m.to_json_string()).unwrap();
    let csv = dir.path().join("trace.csv");
    let (c, out, err) = call(&["iterate", "--manifold", s(&path), "--stages", "1", "--trunc", "4", "--samples", "256", "--csv", s(&csv)]);
    assert_eq!(c, 0, "{err}");
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["result"]["order_chain_holds"], true);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() >= 2);
    assert_eq!(call(&["iterate", "--manifold", s(&path), "--stages", "2", "--trunc", "4"]).0, 3);
}

#[test]
fn limit_check_report_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("limit.json");
    let (c, out, _) = call(&["limit-check", "--m1", "2", "--m2", "1", "--m3", "1", "--out", s(&out_path)]);
    assert_eq!(c, 0);
    assert_eq!(out, std::fs::read_to_string(&out_path).unwrap());
    let r: Value = serde_json::from_str(&out).unwrap();
    assert!(r["result"]["n_star"].as_u64().is_some());
}

#[test]
fn ingest_checks_reality() {
    let dir = tempfile::tempdir().unwrap();
    let m = phi21(dir.path(), (1, 2), 5);
    let (c, out, err) = call(&["ingest", "--manifold", s(&m)]);
    assert_eq!(c, 0, "{err}");
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["result"]["satisfies_reality"], true);
    assert_eq!(r["result"]["order"], 3);
}

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn syslab(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_syslab"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn hm_verify_reports_zero_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), r#"{"version": 1, "n": [3], "r0": [1.0]}"#);
    assert_eq!(syslab(&["hm-verify", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert!(r["data"][0]["mass"].as_f64().unwrap().abs() <= 1e-8);
    let csv = fs::read_to_string(out.join("hm.csv")).unwrap();
    assert!(csv.starts_with("n,r0,sigma,mu,mass,pde_residual\n3,"));
}

#[test]
fn monotonicity_on_hm_cross_section_is_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "surfaces": [{"builder": "hm_cross_section", "n": 4, "r0": 1.0, "z": 5.0}], "levels": 64}"#,
    );
    assert_eq!(syslab(&["monotonicity", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let trace = fs::read_to_string(out.join("trace_0.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("s,A,L,I,J,flagged"));
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 64);
    for j in rows {
        assert!((j - std::f64::consts::TAU).abs() < 1e-5, "{j}");
    }
}

#[test]
fn malformed_documents_are_rejected_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = out.to_str().unwrap();
    for text in [
        r#"{"version": 1,"#,
        r#"{"version": 2}"#,
        r#"{"version": 1, "unknown": 0}"#,
        r#"{"version": 1, "surfaces": [{"builder": "hm_cross_section", "n": 3, "r0": 1.0}]}"#,
        r#"{"version": 1, "surfaces": [{"builder": "hm_cross_section", "n": 2, "r0": 1.0, "z": 5.0}]}"#,
    ] {
        let cfg = write_config(tmp.path(), text);
        assert_eq!(syslab(&["theorem1-disk", "--config", &cfg, "--out", o]), 2, "{text}");
        assert!(!out.exists(), "{text}");
    }
    assert_eq!(syslab(&["frobnicate", "--out", o]), 2);
    assert_eq!(syslab(&["systole", "--config", "/nonexistent.json", "--out", o]), 2);
    assert_eq!(syslab(&["hm-verify", "--tol-scale", "-1", "--out", o]), 2);
    assert!(!out.exists());
    assert_eq!(syslab(&["--help"]), 0);
}

#[test]
fn failing_assertion_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // the exact residual decays like r̂⁻ⁿ, not r̂⁻¹
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "target": {"kind": "hm", "n": 3, "r0": 1.0}, "radii": [10, 20, 40], "halving": true}"#,
    );
    assert_eq!(syslab(&["mean-curvature", "--config", &cfg, "--out", out.to_str().unwrap()]), 1);
    let r = report(&out);
    assert_eq!(r["pass"], false);
    let halving: Vec<&Value> = r["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["name"].as_str().unwrap().starts_with("halving"))
        .collect();
    assert_eq!(halving.len(), 2);
    for a in halving {
        assert_eq!(a["pass"], false);
        // per-doubling factor 1/8 against 1/2 ± 0.1
        assert!((a["margin"].as_f64().unwrap() - (0.1 - 0.375)).abs() < 1e-3);
    }
}

#[test]
fn randomized_campaigns_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "surfaces": [
            {"builder": "random_conformal_disk", "n": 3, "rings": 12, "inradius": 1.0,
             "waves": 3, "max_frequency": 3.0, "amplitude": 0.05},
            {"builder": "random_conformal_disk", "n": 3, "rings": 12, "inradius": 1.0,
             "waves": 3, "max_frequency": 3.0, "amplitude": 0.05}
        ], "levels": 32, "tolerance": 1.0}"#,
    );
    let run = |name: &str, jobs: &str, seed: &str| {
        let out = tmp.path().join(name);
        let status = syslab(&[
            "monotonicity",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--jobs",
            jobs,
        ]);
        assert_eq!(status, 0);
        let files = ["trace_0.csv", "trace_1.csv", "report.json"];
        files.map(|f| fs::read(out.join(f)).unwrap())
    };
    let a = run("a", "1", "7");
    let b = run("b", "4", "7");
    assert_eq!(a, b);
    // distinct streams per entry, distinct seeds per campaign
    assert_ne!(a[0], a[1]);
    let c = run("c", "2", "8");
    assert_ne!(a[0], c[0]);
}

#[test]
fn systole_campaign_cross_checks_enumeration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "tori": [{"basis": [[1.0, 0.0], [0.9, 0.1]]}],
            "random": {"count": 20}, "brute_force_radius": 4}"#,
    );
    assert_eq!(syslab(&["systole", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("systole.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
    assert!(csv.lines().nth(1).unwrap().contains(",1 -1,"));
}

#[test]
fn theorem3_audits_negative_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // twice the Horowitz–Myers charge over the torus with fiber 8π/3
    let cfg = write_config(
        tmp.path(),
        r#"{"version": 1, "expect": "contradiction", "problem": {
            "version": 1, "n": 3,
            "torus": {"basis": [[4.1887902047863905, 0.0], [0.0, 8.377580409572781]]},
            "Q_fourier": [
                {"component": [0, 0], "modes": [[0, 0, -1.3333333333333333, 0.0]]},
                {"component": [1, 1], "modes": [[0, 0, 0.6666666666666666, 0.0]]}
            ]}}"#,
    );
    let status = syslab(&["theorem3", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(status, 0, "{r}");
    assert!(r["data"]["mass"].as_f64().unwrap() < 0.0);
    assert!(r["data"]["contradiction"]["r_hat_critical"].as_f64().unwrap() > 0.0);
}

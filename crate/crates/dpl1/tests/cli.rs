use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpl1::commands::fit_report;
use dpl1::config::Config;
use dpl1_core::rng::StreamRng;
use dpl1_core::Dataset;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpl1"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn base_config(extra: &str) -> String {
    format!(
        r#"{{
  "seed": 11,
  "model": {{
    "design": {{ "family": "gaussian" }},
    "noise": {{ "family": "gaussian", "sigma": 1.0 }},
    "w_star": [0.2]
  }},
  "set": {{ "kind": "box", "center": [0.0], "half_widths": [1.0] }},
  "estimator": {{ "epsilon": 1.0, "eta": 0.1, "assumption": "l2_second" }}{extra}
}}"#
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_writes_requested_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(r#", "synth": { "n": 10 }"#));
    let out = dir.path().join("d.csv");
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,y");
    assert_eq!(lines.len(), 11);
}

#[test]
fn synth_is_reproducible_and_seed_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(r#", "synth": { "n": 25 }"#));
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--out", p(&a)])), 0);
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--out", p(&b)])), 0);
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--out", p(&c), "--seed", "12"])), 0);
    let read = |x: &Path| std::fs::read(x).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn synth_refuses_uncertifiable_moment() {
    let dir = TempDir::new().unwrap();
    let text = base_config(r#", "synth": { "n": 10, "certify_theta": 2.0 }"#)
        .replace(r#"{ "family": "gaussian" }"#, r#"{ "family": "student_t", "nu": 1.8 }"#);
    let cfg = write(dir.path(), "c.json", &text);
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&dir.path().join("d.csv"))]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("synth.certify_theta") && msg.contains("does not exist"), "{msg}");
}

#[test]
fn missing_seed_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let text = base_config(r#", "synth": { "n": 10 }"#).replace(r#""seed": 11,"#, "");
    let cfg = write(dir.path(), "c.json", &text);
    let out = dir.path().join("d.csv");
    let o = run(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"));
    assert_eq!(code(&run(&["synth", "--config", p(&cfg), "--out", p(&out), "--seed", "3"])), 0);
}

#[test]
fn validation_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (base_config("").replace(r#""epsilon": 1.0"#, r#""epsilon": -1.0"#), "estimator.epsilon"),
        (base_config("").replace(r#""epsilon": 1.0"#, r#""epsilon": "big""#), "estimator.epsilon"),
        (base_config("").replace(r#""eta": 0.1"#, r#""eta": 0.1, "iota": 0.0"#), "estimator.iota"),
        (base_config("").replace(r#""sigma": 1.0"#, r#""sigma": 1.0, "nu": 3"#), "model.noise"),
        (base_config("").replace("l2_second", "l2_theta"), "estimator.theta"),
        (base_config("").replace("[0.2]", "[0.2, 0.1]"), "model.w_star"),
        (base_config(r#", "experiment": { "n_values": [20, 10], "epsilons": [1.0], "trials": 2 }"#), "experiment.n_values"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.json"), text);
        let o = run(&["audit", "--config", p(&cfg), "--out", p(&dir.path().join("a.json"))]);
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "case {i}: {}", stderr(&o));
    }
}

#[test]
fn fit_reports_io_and_validation_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(""));
    let out = dir.path().join("fit.json");
    let o = run(&["fit", "--config", p(&cfg), "--data", p(&dir.path().join("nope.csv")), "--out", p(&out)]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));

    let data = write(dir.path(), "d.csv", "x0,y\n1.0,0.5\n-1.0,-0.2\n");
    let zero_iota = write(
        dir.path(),
        "z.json",
        &base_config("").replace(r#""eta": 0.1"#, r#""eta": 0.1, "iota": 0"#),
    );
    let o = run(&["fit", "--config", p(&zero_iota), "--data", p(&data), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("estimator.iota"));

    let bad = write(dir.path(), "bad.csv", "x0,y\n1.0,0.5\n2.0,oops\n");
    let o = run(&["fit", "--config", p(&cfg), "--data", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run(&["fit", "--config", p(&cfg), "--data", p(&data), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["n"], 2);
    assert_eq!(report["params"]["zeta_rule"], "inverse_n");
}

#[test]
fn capacity_error_suggests_a_zeta() {
    let dir = TempDir::new().unwrap();
    let text = base_config("").replace(
        r#""eta": 0.1"#,
        r#""eta": 0.1, "zeta": 0.001, "net_cap": 100"#,
    );
    let cfg = write(dir.path(), "c.json", &text);
    let data = write(dir.path(), "d.csv", "x0,y\n1.0,0.5\n");
    let o = run(&["fit", "--config", p(&cfg), "--data", p(&data), "--out", p(&dir.path().join("f.json"))]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("zeta >="), "{}", stderr(&o));
}

#[test]
fn large_epsilon_fit_lands_near_the_truth() {
    // Noiseless responses, so the truncated risk vanishes at w0 and the
    // near-argmax mechanism picks a net point within ζ of it.
    let w0 = 0.37;
    let text = base_config("").replace(r#""epsilon": 1.0"#, r#""epsilon": 1e4"#);
    let cfg = Config::from_json(&text).unwrap();
    let mut hits = 0;
    for run in 0..100u64 {
        let mut rng = StreamRng::new(run);
        let rows: Vec<(Vec<f64>, f64)> = (0..50)
            .map(|_| {
                let x = 4.0 * rng.uniform() - 2.0;
                (vec![x], w0 * x)
            })
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let report = fit_report(&cfg, &data, run).unwrap();
        hits += ((report.w_tilde[0] - w0).abs() <= 2.0 * report.params.zeta) as usize;
    }
    assert!(hits >= 95, "{hits}");
}

fn audit_config(extra: &str) -> String {
    base_config(&format!(r#", "audit": {{ "n": 10, "pairs": 50{extra} }}"#))
}

#[test]
fn default_audit_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &audit_config(""));
    let out = dir.path().join("a.json");
    let o = run(&["audit", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["max_log_ratio"].as_f64().unwrap() <= 1.0 + 1e-9);
    assert_eq!(report["adversarial_pairs"], 1);
    assert_eq!(report["per_pair"].as_array().unwrap().len(), 51);
}

#[test]
fn under_calibrated_audit_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &audit_config(r#", "sensitivity_scale": 0.25, "iota": 1.0"#),
    );
    let out = dir.path().join("a.json");
    let o = run(&["audit", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn single_point_net_audit_has_zero_ratio() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &audit_config(r#", "zeta": 5.0"#));
    let out = dir.path().join("a.json");
    let o = run(&["audit", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["net_size"], 1);
    assert_eq!(report["max_log_ratio"], 0.0);
}

#[test]
fn net_export_has_header_and_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &base_config(r#", "net": { "zeta": 0.1, "probes": 1000 }"#));
    let out = dir.path().join("net.csv");
    let o = run(&["net", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("dim0"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn trivial_sweep_has_one_row_and_no_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &base_config(r#", "experiment": { "n_values": [50], "epsilons": [1.0], "trials": 1 }"#),
    );
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,d,epsilon,theta,assumption,trial,seed,excess_risk,net_size,iota,zeta,wall_time_ms"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["slopes"][0]["slope"].is_null());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["root_seed"], 11);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_records_capacity_failures_and_continues() {
    let dir = TempDir::new().unwrap();
    let text = base_config(r#", "experiment": { "n_values": [20, 40, 4000], "epsilons": [1.0], "trials": 2 }"#)
        .replace(r#""eta": 0.1"#, r#""eta": 0.1, "net_cap": 10"#)
        .replace(r#""assumption": "l2_second""#, r#""assumption": "l2_second", "tau": 1.0"#);
    let cfg = write(dir.path(), "c.json", &text);
    let out = dir.path().join("sweep");
    let o = run(&["sweep", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let cells = summary["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    assert!(cells.iter().any(|c| c["trials"] == 2));
    assert!(cells.iter().any(|c| c["skipped"].as_str().is_some_and(|m| m.contains("cap"))), "{cells:?}");
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    let rows = cells.iter().map(|c| c["trials"].as_u64().unwrap()).sum::<u64>();
    assert_eq!(csv.lines().count() as u64, rows + 1);
}

#[test]
fn missing_flags_are_validation_errors() {
    let o = run(&["synth"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--config"));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isoquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoquant"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn eval_reports_oval_metrics() {
    let v = json(&isoquant(&["eval", "--family", "oval", "--beta", "0.4", "--m", "2"]));
    assert_eq!(v["family"], "oval");
    assert!((v["area"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-10);
    assert_eq!(v["centers"].as_array().unwrap().len(), 1);
    let (d, a, q) = (
        v["deficit"].as_f64().unwrap(),
        v["alpha"].as_f64().unwrap(),
        v["q"].as_f64().unwrap(),
    );
    // psi_2(alpha) = c_1 alpha with c_1 = 0.
    assert!((q - d / (a * a)).abs() < 1e-9);
}

#[test]
fn eval_is_deterministic_and_hash_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["eval", "--family", "biscuit", "--L", "0.7", "--m", "2"];
    let a = isoquant(&args);
    let b = isoquant(&args);
    assert_eq!(a.stdout, b.stdout);
    let hash = json(&a)["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let svg = p(dir.path(), "b.svg");
    let mut with_svg = args.to_vec();
    with_svg.extend(["--svg", &svg]);
    assert!(isoquant(&with_svg).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    // Output paths are part of the configuration, so the hash differs.
    assert!(text.starts_with("<svg") && text.contains("config-sha256: ") && text.contains("<circle"));
    assert!(!text.contains(&hash));
}

#[test]
fn eval_writes_csv_with_schema_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "e.csv");
    assert!(isoquant(&["eval", "--family", "pk", "--k", "3", "--beta", "0.3", "--out", &out])
        .status
        .success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# isoquant-schema v1");
    assert_eq!(
        lines[1],
        "family,parameter,area,perimeter,deficit,alpha,center_count,center_x,center_y,q"
    );
    assert!(lines[2].starts_with("pk,0.3,"));
    // No quotient order given: empty q column.
    assert!(lines[2].ends_with(','));
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "c.json");
    std::fs::write(&cfg, r#"{"family": "oval", "params": {"beta": 0.3}, "m": 2}"#).unwrap();
    let base = json(&isoquant(&["eval", "--config", &cfg]));
    assert_eq!(base["parameter"], 0.3);
    let over = json(&isoquant(&["eval", "--config", &cfg, "--beta", "0.5"]));
    assert_eq!(over["parameter"], 0.5);
    assert_ne!(base["config_sha256"], over["config_sha256"]);

    std::fs::write(&cfg, r#"{"family": "oval", "betta": 0.3}"#).unwrap();
    let bad = isoquant(&["eval", "--config", &cfg]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(isoquant(&["eval", "--config", &p(dir.path(), "missing.json")]).status.code(), Some(2));
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(isoquant(&["eval", "--family", "hexagon"]).status.code(), Some(2));
    assert_eq!(isoquant(&["eval", "--family", "oval"]).status.code(), Some(2));
    assert_eq!(isoquant(&["frobnicate"]).status.code(), Some(2));
    // Outside the family's feasible range: a numerical failure.
    assert_eq!(isoquant(&["eval", "--family", "oval", "--beta", "1.4"]).status.code(), Some(3));
}

#[test]
fn disk_quotient_is_undefined() {
    let v = json(&isoquant(&["eval", "--family", "disk", "--m", "2"]));
    assert_eq!(v["alpha"], 0.0);
    assert!(v["q"].is_null());
}

#[test]
fn sweep_resumes_and_handles_empty_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "s.csv");
    let run = |grid: &str| isoquant(&["sweep", "--family", "oval", "--m", "2", "--grid", grid, "--out", &out]);
    assert!(run("0.2,0.4").status.success());
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 4);
    assert!(run("0.2:0.6:5").status.success());
    let second = std::fs::read_to_string(&out).unwrap();
    assert!(second.starts_with(&first));
    let params: Vec<&str> = second.lines().skip(2).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(params, ["0.2", "0.4", "0.3", "0.5", "0.6"]);

    let empty = p(dir.path(), "empty.csv");
    assert!(isoquant(&["sweep", "--family", "oval", "--grid", "", "--out", &empty])
        .status
        .success());
    assert_eq!(std::fs::read_to_string(&empty).unwrap().lines().count(), 2);
    assert_eq!(isoquant(&["sweep", "--family", "disk", "--grid", "0.1"]).status.code(), Some(2));
}

#[test]
fn sweep_reports_infeasible_points_but_keeps_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "s.csv");
    let r = isoquant(&["sweep", "--family", "oval", "--grid", "0.3,1.4", "--out", &out]);
    assert_eq!(r.status.code(), Some(3));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
}

#[test]
fn fit_coeffs_recovers_the_second_order_constant() {
    let v = json(&isoquant(&["fit-coeffs", "--m", "2"]));
    let c2 = std::f64::consts::PI / (8.0 * (4.0 - std::f64::consts::PI));
    assert!((v["value"].as_f64().unwrap() - c2).abs() < 1e-3);
    assert_eq!(v["alpha_grid"].as_array().unwrap().len(), 5);
    assert_eq!(isoquant(&["fit-coeffs", "--m", "2", "--grid", "0.2,0.1"]).status.code(), Some(3));
}

#[test]
fn symmetrize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (svg, prof) = (p(dir.path(), "s.svg"), p(dir.path(), "p.csv"));
    let v = json(&isoquant(&[
        "symmetrize", "--family", "pk", "--k", "4", "--beta", "0.2", "--svg", &svg, "--profile", &prof,
    ]));
    assert!(v["perimeter_after"].as_f64().unwrap() < v["perimeter_before"].as_f64().unwrap());
    assert_eq!(v["centered_at_origin"], true);
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<path").count(), 2);
    let rows = std::fs::read_to_string(&prof).unwrap();
    assert_eq!(rows.lines().nth(1), Some("rho,theta_before,theta_after"));

    assert_eq!(isoquant(&["symmetrize", "--family", "disk"]).status.code(), Some(3));
    assert_eq!(isoquant(&["symmetrize", "--family", "biscuit", "--L", "1"]).status.code(), Some(2));
}

#[test]
fn search_writes_outputs_and_flags_exhausted_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let (out, trace, svg) = (p(dir.path(), "r.json"), p(dir.path(), "t.csv"), p(dir.path(), "r.svg"));
    let r = isoquant(&[
        "--threads", "1", "search", "--family", "biscuit", "--m", "2", "--out", &out, "--trace", &trace, "--svg", &svg,
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["param_names"][0], "L");
    assert!((v["verified_value"].as_f64().unwrap() - 0.405585).abs() < 5e-4);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().nth(1), Some("step,L,value"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<circle"));

    let short = isoquant(&["search", "--family", "biscuit", "--m", "2", "--budget", "8", "--out", &out]);
    assert_eq!(short.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
    assert_eq!(isoquant(&["search", "--family", "free", "--m", "2"]).status.code(), Some(2));
    assert_eq!(isoquant(&["search", "--family", "disk"]).status.code(), Some(2));
}

#[test]
fn eval_writes_json_and_csv_side_by_side() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "e.json");
    assert!(isoquant(&["eval", "--family", "oval", "--beta", "0.3", "--out", &out]).status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["parameter"], 0.3);
    let csv = std::fs::read_to_string(p(dir.path(), "e.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("oval,0.3,"));
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().skip(1);
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn oval_sweep_has_increasing_asymmetry() {
    let r = isoquant(&["sweep", "--family", "oval", "--grid", "0.05:0.8:64"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let alpha = column(&String::from_utf8(r.stdout).unwrap(), "alpha");
    assert_eq!(alpha.len(), 64);
    assert!(alpha.windows(2).all(|w| w[1] > w[0]), "{alpha:?}");
}

#[test]
fn biscuit_sweep_has_an_interior_minimum() {
    let r = isoquant(&["sweep", "--family", "biscuit", "--m", "2", "--grid", "0.2:2.0:10"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let q = column(&String::from_utf8(r.stdout).unwrap(), "q");
    let (best, _) = q
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert!(best > 0 && best < q.len() - 1, "{q:?}");
}

#[test]
fn symmetrizing_an_oval_is_a_fixed_point() {
    let v = json(&isoquant(&["symmetrize", "--family", "oval", "--beta", "0.4"]));
    for key in ["perimeter", "asymmetry"] {
        let (before, after) = (
            v[format!("{key}_before")].as_f64().unwrap(),
            v[format!("{key}_after")].as_f64().unwrap(),
        );
        assert!((before - after).abs() <= 1e-6 * before, "{key}: {before} vs {after}");
    }
}

#[test]
fn free_search_dumps_its_best_shape_even_when_unconverged() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "f.json");
    let args = [
        "--threads", "1", "search", "--family", "free", "--m", "2", "--alpha0", "0.05", "--modes", "4", "--budget",
        "40", "--out", &out,
    ];
    let r = isoquant(&args);
    assert!(matches!(r.status.code(), Some(0 | 3)));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["best_value"].as_f64().unwrap().is_finite());
    assert!(v["alpha"].as_f64().unwrap() >= 0.05 - 1e-3);
    assert!(v["shape"].is_object() || v["shape"].is_array());
    // Same configuration, same bytes.
    isoquant(&args);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
}

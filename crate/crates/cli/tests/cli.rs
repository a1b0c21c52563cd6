//! End-to-end runs of the `rhognf` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rhognf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhognf"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("RHOGNF_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_provenance(doc: &Value, seed: Option<u64>) {
    let p = &doc["provenance"];
    assert_eq!(p["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(p["seed"].as_u64(), seed);
}

fn fast<'a>(args: &[&'a str]) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.extend(["--max-epochs", "3", "--patience", "2", "--n-samples", "2000"]);
    v
}

#[test]
fn simulate_table_row_writes_dataset_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:2", "--n", "20000", "--seed", "7"]));
    let csv = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert!(csv.starts_with("a,y\n"));
    assert_eq!(csv.lines().count(), 20_001);
    let side = json(&dir.path().join("data.json"));
    assert_eq!(side["true_ace"].as_f64(), Some(0.0));
    assert_eq!(side["rows"].as_u64(), Some(20_000));
    assert_provenance(&side, Some(7));
}

#[test]
fn simulate_binary_sidecar_matches_exact_marginals() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "binary", "--n", "500", "--seed", "0", "--name", "bin"]));
    let side = json(&dir.path().join("bin.json"));
    let s = &side["exact_stats"][0];
    let f = |k: &str| s[k].as_f64().unwrap();
    let centre = f("q1") * f("p1") - f("q0") * f("p0");
    assert!((side["af_bounds"]["lower"].as_f64().unwrap() - (centre - f("p1"))).abs() < 1e-15);
    assert!((side["af_bounds"]["upper"].as_f64().unwrap() - (centre + f("p0"))).abs() < 1e-15);
    let truth = side["true_ace"].as_f64().unwrap();
    assert!(side["af_bounds"]["lower"].as_f64().unwrap() <= truth && truth <= side["af_bounds"]["upper"].as_f64().unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = rhognf(dir.path(), &["simulate", "--dgp", "table1:2", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rhognf(dir.path(), &["simulate", "--dgp", "table1:9", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rhognf(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:1", "--n", "200"]));
    let data = dir.path().join("data.csv");
    let out = rhognf(dir.path(), &["fit", "--data", data.to_str().unwrap(), "--rho", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rhognf(dir.path(), &["sweep", "--data", data.to_str().unwrap(), "--grid", "0.2,0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_three_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,y\n0,1\n1,oops\n").unwrap();
    let out = rhognf(dir.path(), &["fit", "--data", bad.to_str().unwrap(), "--rho", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let cont = dir.path().join("cont.csv");
    std::fs::write(&cont, "a,y\n0,1\n1,0.5\n").unwrap();
    let out = rhognf(dir.path(), &["bounds", cont.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn numerical_failures_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:1", "--n", "400"]));
    let data = dir.path().join("data.csv");
    let out = rhognf(
        dir.path(),
        &["fit", "--data", data.to_str().unwrap(), "--rho", "0.5", "--learning-rate", "1e12", "--max-epochs", "3"],
    );
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 3\n[simulate]\ndgp = \"table1:4\"\nn = 150\nname = \"from_config\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    ok(rhognf(dir.path(), &["--config", c, "simulate"]));
    let side = json(&dir.path().join("from_config.json"));
    assert_eq!(side["rows"].as_u64(), Some(150));
    assert_provenance(&side, Some(3));
    let hash = side["provenance"]["config_hash"].clone();

    ok(rhognf(dir.path(), &["--config", c, "simulate", "--n", "160", "--name", "flagged"]));
    let flagged = json(&dir.path().join("flagged.json"));
    assert_eq!(flagged["rows"].as_u64(), Some(160));
    assert_ne!(flagged["provenance"]["config_hash"], hash);

    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:4", "--n", "150", "--seed", "3", "--name", "from_config"]));
    assert_eq!(json(&dir.path().join("from_config.json"))["provenance"]["config_hash"], hash);

    std::fs::write(&cfg, "n = \"many\"\n").unwrap();
    let out = rhognf(dir.path(), &["--config", c, "simulate", "--dgp", "binary"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested/out");
    let out = Command::new(env!("CARGO_BIN_EXE_rhognf"))
        .args(["simulate", "--dgp", "binary", "--n", "120"])
        .env("RHOGNF_OUT_DIR", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("data.csv").exists());
    assert!(!dir.path().join("data.csv").exists());
}

#[test]
fn fit_writes_report_and_loadable_params() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:3", "--n", "1000", "--seed", "1"]));
    let data = dir.path().join("data.csv");
    ok(rhognf(
        dir.path(),
        &["fit", "--data", data.to_str().unwrap(), "--rho", "-0.3", "--max-epochs", "4", "--seed", "5"],
    ));
    let report = json(&dir.path().join("fit.json"));
    assert_provenance(&report, Some(5));
    assert_eq!(report["report"]["n_train"].as_u64(), Some(800));
    assert!(report["report"]["test_nll"].as_f64().unwrap().is_finite());
    let params = rhognf::flow::FlowParams::load(&dir.path().join("fit.params.json")).unwrap();
    assert!(params.forward_a(0.3).unwrap().value.is_finite());
}

#[test]
fn independent_gaussians_fit_to_their_entropy() {
    let dir = tempfile::tempdir().unwrap();
    // linear row with zero effect and zero noise covariance is two independent normals
    let dgp = dir.path().join("indep.cfg");
    std::fs::write(&dgp, "kind = linear\nalpha = 0\nbeta = 0\ndelta = 1\n").unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", dgp.to_str().unwrap(), "--n", "20000", "--seed", "2"]));
    let data = dir.path().join("data.csv");
    ok(rhognf(dir.path(), &["fit", "--data", data.to_str().unwrap(), "--rho", "0"]));
    let nll = json(&dir.path().join("fit.json"))["report"]["test_nll"].as_f64().unwrap();
    let entropy = (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    assert!((nll - entropy).abs() < 0.05, "{nll}");
}

#[test]
fn sweep_recovers_table_row_effect_at_its_rho() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:4", "--n", "20000", "--seed", "4"]));
    let data = dir.path().join("data.csv");
    ok(rhognf(dir.path(), &["sweep", "--data", data.to_str().unwrap(), "--grid", "0.2,0.32,0.4"]));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect::<Vec<f64>>())
        .min_by(|a, b| (a[0] - 0.32).abs().total_cmp(&(b[0] - 0.32).abs()))
        .unwrap();
    assert!((row[1] - 0.2).abs() <= 0.05, "ace at 0.32: {}", row[1]);
    let doc = json(&dir.path().join("sweep.json"));
    assert_provenance(&doc, Some(0));
    assert_eq!(doc["curve"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn single_point_sweep_collapses_bounds_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "binary", "--n", "600", "--seed", "8"]));
    let data = dir.path().join("data.csv");
    let d = data.to_str().unwrap();
    let base = ["sweep", "--data", d, "--a-kind", "discrete:2", "--y-kind", "discrete:2", "--grid", "0.3"];
    ok(rhognf(dir.path(), &fast(&[&base[..], &["--name", "one"]].concat())));
    ok(rhognf(dir.path(), &fast(&[&base[..], &["--name", "two"]].concat())));
    let one = std::fs::read(dir.path().join("one.csv")).unwrap();
    assert_eq!(one, std::fs::read(dir.path().join("two.csv")).unwrap());
    let curve = &json(&dir.path().join("one.json"))["curve"];
    assert_eq!(curve["points"].as_array().unwrap().len(), 1);
    assert_eq!(curve["bounds"]["lower"], curve["bounds"]["upper"]);
    assert_eq!(curve["bounds"]["lower"], curve["points"][0]["ace"]);
    // decoded binary outcomes keep the effect within [-1, 1]
    assert!(curve["points"][0]["ace"].as_f64().unwrap().abs() <= 1.0);
}

#[test]
fn bounds_sum_over_outcome_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "categorical", "--n", "3000", "--seed", "6", "--name", "cat"]));
    let dims: Vec<String> = (0..7).map(|d| dir.path().join(format!("cat.dim{d}.csv")).to_str().unwrap().to_string()).collect();
    let mut args = vec!["bounds"];
    args.extend(dims.iter().map(String::as_str));
    ok(rhognf(dir.path(), &args));
    let doc = json(&dir.path().join("bounds.json"));
    let total = &doc["total"];
    let width = total["upper"].as_f64().unwrap() - total["lower"].as_f64().unwrap();
    assert!((width - 7.0).abs() < 1e-12);
    assert_eq!(doc["dimensions"].as_array().unwrap().len(), 7);
    assert_provenance(&doc, None);

    ok(rhognf(dir.path(), &["bounds", &dims[0], "--name", "single"]));
    let single = json(&dir.path().join("single.json"));
    assert_eq!(single["total"], single["dimensions"][0]["af_bounds"]);
}

#[test]
fn report_merges_sweeps_into_one_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(dir.path(), &["simulate", "--dgp", "table1:1", "--n", "400"]));
    let d = dir.path().join("data.csv");
    let d = d.to_str().unwrap();
    ok(rhognf(dir.path(), &fast(&["sweep", "--data", d, "--grid", "-0.5,0.5", "--name", "left"])));
    ok(rhognf(dir.path(), &fast(&["sweep", "--data", d, "--grid", "0.0", "--name", "right"])));
    let l = dir.path().join("left.json");
    let r = dir.path().join("right.json");
    ok(rhognf(dir.path(), &["report", l.to_str().unwrap(), r.to_str().unwrap()]));
    let table = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "curve,rho,ace,ey1,ey0");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("left,-0.5,") && lines[3].starts_with("right,0,"));
    assert_eq!(json(&dir.path().join("report.json"))["sources"].as_array().unwrap().len(), 2);

    let side = dir.path().join("data.json");
    let out = rhognf(dir.path(), &["report", side.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn binary_batch_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    ok(rhognf(
        dir.path(),
        &fast(&["sweep", "--binary-batch", "2", "--n", "500", "--grid", "-0.5,0.5", "--seed", "10", "--name", "batch"]),
    ));
    let doc = json(&dir.path().join("batch.json"));
    let runs = doc["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[1]["seed"].as_u64(), Some(11));
    for r in runs {
        assert!(r["contains_truth"].is_boolean() && r["within_af"].is_boolean());
        assert!((r["af_bounds"]["upper"].as_f64().unwrap() - r["af_bounds"]["lower"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(doc["mean_width"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(dir.path().join("batch.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

//! End-to-end tests of the `solarcast` binary: artifacts, formats and the
//! exit-code taxonomy (2 config, 3 data, 4 numerical).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use solarcast::{Dataset, LinearModel, Schema};

fn solarcast() -> Command {
    Command::new(env!("CARGO_BIN_EXE_solarcast"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = solarcast().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> (i32, String) {
    let out = solarcast().args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).to_string())
}

/// Generate a small noise-free dataset and return (data, schema) paths.
fn synth_small(dir: &Path, noise: &str, n: &str, seed: &str) -> (PathBuf, PathBuf) {
    let out = dir.join("synth");
    run_ok(&[
        "synth",
        "--n",
        n,
        "--informative",
        "tempF=0.12,humidity=-0.05",
        "--nuisance",
        "cloudcover,pressure,windspeedMiles",
        "--noise-std",
        noise,
        "--feature-correlation",
        "0.2",
        "--forecast-block",
        "false",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
    (out.join("data.csv"), out.join("schema.json"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn synth_artifacts_parse_back_through_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema_path) = synth_small(dir.path(), "0.5", "150", "3");
    let schema = Schema::from_json_str(&read(&schema_path)).unwrap();
    let d = Dataset::parse_csv(read(&data).as_bytes(), schema).unwrap();
    assert_eq!(d.n_rows(), 150);
    assert_eq!(d.schema().target_name(), "pv_power");
    // irradiance channel is always present
    assert!(d.column("input1A").is_ok());

    let truth = json(&dir.path().join("synth").join("ground_truth.json"));
    assert_eq!(truth["coefficients"]["tempF"], serde_json::json!(0.12));
    assert_eq!(truth["intercept"], serde_json::json!(2.5));
}

#[test]
fn fit_reports_near_zero_whole_mse_on_noise_free_data() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0", "200", "5");
    let out = dir.path().join("fit");
    run_ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--alpha",
        "0.05",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let metrics = json(&out.join("metrics.json"));
    assert!(metrics["ols"]["whole_mse"].as_f64().unwrap() < 1e-8);
    assert_eq!(metrics["lasso"]["alpha"], serde_json::json!(0.05));
    assert!(metrics["lasso"]["alpha_star"].is_null());

    let model = LinearModel::from_json_str(&read(&out.join("model_ols.json"))).unwrap();
    assert_eq!(model.alpha(), 0.0);
    assert!(model.feature_names().contains(&"tempF".to_string()));
    let lasso = LinearModel::from_json_str(&read(&out.join("model_lasso.json"))).unwrap();
    assert_eq!(lasso.alpha(), 0.05);
}

#[test]
fn fit_with_cv_records_alpha_star_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.4", "150", "7");
    let out = dir.path().join("fit");
    run_ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--alpha",
        "cv",
        "--folds",
        "4",
        "--grid-size",
        "6",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let metrics = json(&out.join("metrics.json"));
    let star = metrics["lasso"]["alpha_star"].as_f64().unwrap();
    assert!(star > 0.0);
    assert_eq!(metrics["lasso"]["alpha"], metrics["lasso"]["alpha_star"]);
    assert_eq!(metrics["lasso"]["cv_table"], serde_json::json!("cv_table.csv"));
    let table = read(&out.join("cv_table.csv"));
    assert!(table.starts_with("alpha,cv_mse,fold_0,fold_1,fold_2,fold_3"));
    assert_eq!(table.lines().count(), 1 + 6);
}

#[test]
fn cv_command_emits_summary_and_selected_row_is_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.4", "120", "9");
    let out = dir.path().join("cv");
    run_ok(&[
        "cv",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--folds",
        "3",
        "--grid-size",
        "8",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let summary = json(&out.join("cv.json"));
    let star = summary["alpha_star"].as_f64().unwrap();
    let table = read(&out.join("cv_table.csv"));
    let mut best: Option<(f64, f64)> = None;
    for line in table.lines().skip(1) {
        let mut cells = line.split(',');
        let alpha: f64 = cells.next().unwrap().parse().unwrap();
        let cv: f64 = cells.next().unwrap().parse().unwrap();
        if best.is_none() || cv < best.unwrap().1 {
            best = Some((alpha, cv));
        }
    }
    assert_eq!(best.unwrap().0, star);
}

#[test]
fn knockout_emits_table_json_and_chart() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "200", "11");
    let out = dir.path().join("ko");
    run_ok(&[
        "knockout",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--top-k",
        "4",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("knockout.csv"));
    assert!(csv.starts_with("rank,feature,mse_without,delta,important"));
    assert_eq!(csv.lines().count(), 1 + 4);
    let report = json(&out.join("knockout.json"));
    assert!(report["baseline_mse"].as_f64().unwrap() > 0.0);
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    let svg = read(&out.join("knockout.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("baseline"));
}

#[test]
fn knockout_clamps_oversized_top_k_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "150", "13");
    let out = dir.path().join("ko");
    let output = solarcast()
        .args([
            "knockout",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--top-k",
            "500",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("clamping"));
    // 2 informative + 3 nuisance + irradiance = 6 features
    let csv = read(&out.join("knockout.csv"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn sweep_k_emits_one_row_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "200", "15");
    let out = dir.path().join("sk");
    run_ok(&[
        "sweep-k",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--k-max",
        "5",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("sweep_k.csv"));
    assert!(csv.starts_with("x,mse_mean,mse_std,reps"));
    let xs: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(xs, vec!["1", "2", "3", "4", "5"]);
}

#[test]
fn sweep_k_smoothing_window_one_draws_raw_curve_only() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "150", "17");
    let run = |window: &str, name: &str| {
        let out = dir.path().join(name);
        run_ok(&[
            "sweep-k",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--k-max",
            "4",
            "--smooth-window",
            window,
            "--out",
            out.to_str().unwrap(),
        ]);
        out
    };
    let raw = run("1", "w1");
    let smooth = run("3", "w3");
    assert!(!read(&raw.join("sweep_k.svg")).contains("moving average"));
    assert!(read(&smooth.join("sweep_k.svg")).contains("moving average (w=3)"));
    // smoothing is chart-only; the CSV artifact is identical
    assert_eq!(read(&raw.join("sweep_k.csv")), read(&smooth.join("sweep_k.csv")));
}

#[test]
fn sweep_n_emits_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "240", "19");
    let out = dir.path().join("sn");
    run_ok(&[
        "sweep-n",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--sizes",
        "60,120",
        "--reps",
        "2",
        "--seed",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("sweep_n.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("60,"));
    assert!(rows[1].starts_with("120,"));
    assert!(rows[0].ends_with(",2"));
}

#[test]
fn report_bins_predictions_in_watts() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.2", "240", "21");
    let out = dir.path().join("rep");
    run_ok(&[
        "report",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--bins",
        "10",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("pred_vs_measured.csv"));
    assert!(csv.starts_with("measured_center_w,pred_mean_w,pred_std_w,count"));
    assert!(csv.lines().count() > 2);
    let counts: usize = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counts, 96); // 40% of 240 rows held out
    assert!(read(&out.join("pred_vs_measured.svg")).contains("measured = predicted"));
}

#[test]
fn missing_data_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (_, schema) = synth_small(dir.path(), "0.3", "120", "23");
    let (code, stderr) = exit_code(&[
        "fit",
        "--data",
        "/nonexistent/nowhere.csv",
        "--schema",
        schema.to_str().unwrap(),
        "--alpha",
        "0.1",
    ]);
    assert_eq!(code, 3, "stderr: {stderr}");
    assert!(stderr.contains("data error"));
}

#[test]
fn bad_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"not_a_field": 1}"#).unwrap();
    let (code, stderr) = exit_code(&["fit", "--config", config.to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("config error"));
}

#[test]
fn bad_alpha_flag_exits_2() {
    let (code, _) = exit_code(&["fit", "--alpha", "tiny"]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_n_without_sizes_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = synth_small(dir.path(), "0.3", "120", "25");
    let (code, stderr) = exit_code(&[
        "sweep-n",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("sizes"));
}

#[test]
fn constant_feature_column_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    std::fs::write(
        &schema,
        r#"[
            {"name": "timestamp", "kind": "timestamp", "unit": ""},
            {"name": "flat", "kind": "weather_current", "unit": ""},
            {"name": "pv_power", "kind": "target", "unit": "kW"}
        ]"#,
    )
    .unwrap();
    let data = dir.path().join("data.csv");
    let mut csv = String::from("timestamp,flat,pv_power\n");
    for i in 0..20 {
        csv.push_str(&format!("{},5.0,{}\n", 100 + i, i));
    }
    std::fs::write(&data, csv).unwrap();
    let (code, stderr) = exit_code(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 4, "stderr: {stderr}");
    assert!(stderr.contains("numerical error"));
    assert!(stderr.contains("flat"));
}

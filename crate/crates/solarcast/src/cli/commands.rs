//! Implementations of the CLI subcommands.

use std::fs;
use std::path::Path;

use serde_json::json;

use super::config::{AlphaChoice, FeatureSelection, RunConfig};
use super::{CliError, SynthArgs};
use crate::analysis::{knockout, rank_by_abs_coef, sweep_sample_size, sweep_top_k, SweepPoint};
use crate::dataio::{CleanPolicy, ColumnKind, Dataset, FeatureMatrix, Schema, SplitSpec};
use crate::modelsel::{alpha_grid, kfold_indices, select_alpha};
use crate::regression::{fit_lasso, fit_ols, mse, predict, FitOptions, LinearModel};
use crate::report::{bin_by_measured, moving_average, write_atomic, Band, Chart, Series};
use crate::synthgen::{generate, SynthSpec};

struct LoadedData {
    dataset: Dataset,
    dropped: usize,
    features: Vec<String>,
    target: String,
}

fn load(cfg: &RunConfig) -> Result<LoadedData, CliError> {
    let schema_path = cfg
        .schema_path
        .as_ref()
        .ok_or_else(|| CliError::Config("schema path required (--schema or config)".into()))?;
    let data_path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| CliError::Config("data path required (--data or config)".into()))?;

    let schema_text = fs::read_to_string(schema_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", schema_path.display())))?;
    let schema = Schema::from_json_str(&schema_text)?;

    let file = fs::File::open(data_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", data_path.display())))?;
    let raw = Dataset::parse_csv(file, schema)?;
    let (dataset, dropped) = raw.clean(CleanPolicy::DropRows)?;

    let target = match &cfg.target {
        Some(t) => t.clone(),
        None => dataset.schema().target_name().to_string(),
    };
    let features = match &cfg.features {
        FeatureSelection::Keyword(_) => {
            let names = dataset.schema().names_with_kind(&[
                ColumnKind::WeatherCurrent,
                ColumnKind::WeatherForecast,
                ColumnKind::Irradiance,
            ]);
            let names: Vec<String> = names.into_iter().filter(|n| *n != target).collect();
            if names.is_empty() {
                return Err(CliError::Config(
                    "schema has no weather/forecast/irradiance columns to use as features".into(),
                ));
            }
            names
        }
        FeatureSelection::List(list) => {
            let known: Vec<&str> =
                dataset.schema().columns().iter().map(|c| c.name.as_str()).collect();
            for name in list {
                if !known.contains(&name.as_str()) {
                    return Err(CliError::Config(format!(
                        "feature `{name}` is not a schema column"
                    )));
                }
            }
            list.clone()
        }
    };
    Ok(LoadedData { dataset, dropped, features, target })
}

fn fit_opts(cfg: &RunConfig) -> FitOptions {
    FitOptions { tol: cfg.tol, max_iter: cfg.max_iter }
}

struct SplitMatrices {
    whole: FeatureMatrix,
    train: FeatureMatrix,
    test: FeatureMatrix,
}

fn split_matrices(cfg: &RunConfig, data: &LoadedData) -> Result<SplitMatrices, CliError> {
    let whole = data.dataset.to_matrix(&data.features, &data.target)?;
    let (train_ds, test_ds) = data
        .dataset
        .split(&SplitSpec { train_fraction: cfg.train_fraction, seed: cfg.seed })?;
    let train = train_ds.to_matrix(&data.features, &data.target)?;
    let test = test_ds.to_matrix(&data.features, &data.target)?;
    Ok(SplitMatrices { whole, train, test })
}

fn estimator_metrics(
    whole_model: &LinearModel,
    split_model: &LinearModel,
    m: &SplitMatrices,
) -> Result<serde_json::Value, CliError> {
    let whole_pred = predict(whole_model, &m.whole)?;
    let train_pred = predict(split_model, &m.train)?;
    let test_pred = predict(split_model, &m.test)?;
    Ok(json!({
        "whole_mse": mse(whole_pred.as_slice(), m.whole.y().as_slice())?,
        "train_mse": mse(train_pred.as_slice(), m.train.y().as_slice())?,
        "test_mse": mse(test_pred.as_slice(), m.test.y().as_slice())?,
    }))
}

fn out_file(cfg: &RunConfig, name: &str) -> std::path::PathBuf {
    cfg.output_dir.join(name)
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Run cross-validation on a matrix and return `(alpha_star, table_csv)`.
fn cross_validate(
    cfg: &RunConfig,
    matrix: &FeatureMatrix,
) -> Result<(f64, String), CliError> {
    let folds = kfold_indices(matrix.n_rows(), cfg.folds, cfg.seed)?;
    let grid = alpha_grid(matrix, cfg.grid_size, cfg.grid_eps)?;
    let (alpha_star, table) = select_alpha(matrix, &folds, &grid, &fit_opts(cfg))?;
    Ok((alpha_star, table.to_csv_string()))
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let m = split_matrices(cfg, &data)?;
    let opts = fit_opts(cfg);

    let ols_whole = fit_ols(&m.whole, &opts)?;
    let ols_split = fit_ols(&m.train, &opts)?;
    let ols_metrics = estimator_metrics(&ols_whole, &ols_split, &m)?;

    let (alpha, alpha_star, cv_table_name) = match &cfg.alpha {
        AlphaChoice::Value(a) => (*a, None, None),
        AlphaChoice::Keyword(_) => {
            let (star, csv) = cross_validate(cfg, &m.whole)?;
            let name = "cv_table.csv";
            write_out(&out_file(cfg, name), &csv)?;
            (star, Some(star), Some(name.to_string()))
        }
    };
    let lasso_whole = fit_lasso(&m.whole, alpha, &opts)?;
    let lasso_split = fit_lasso(&m.train, alpha, &opts)?;
    let lasso_metrics = estimator_metrics(&lasso_whole, &lasso_split, &m)?;

    write_out(&out_file(cfg, "model_ols.json"), &ols_split.to_json_string())?;
    write_out(&out_file(cfg, "model_lasso.json"), &lasso_split.to_json_string())?;

    let metrics = json!({
        "n_rows": data.dataset.n_rows(),
        "n_features": data.features.len(),
        "dropped_rows": data.dropped,
        "seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "target": data.target,
        "ols": ols_metrics,
        "lasso": {
            "alpha": alpha,
            "alpha_star": alpha_star,
            "cv_table": cv_table_name,
            "whole_mse": lasso_metrics["whole_mse"],
            "train_mse": lasso_metrics["train_mse"],
            "test_mse": lasso_metrics["test_mse"],
        },
    });
    write_out(&out_file(cfg, "metrics.json"), &pretty(&metrics))?;
    println!(
        "fit: ols test_mse {} | lasso(alpha={alpha}) test_mse {}",
        ols_metrics["test_mse"], lasso_metrics["test_mse"]
    );
    Ok(())
}

pub fn cmd_cv(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let matrix = data.dataset.to_matrix(&data.features, &data.target)?;
    let (alpha_star, csv) = cross_validate(cfg, &matrix)?;
    write_out(&out_file(cfg, "cv_table.csv"), &csv)?;
    let summary = json!({
        "alpha_star": alpha_star,
        "folds": cfg.folds,
        "grid_size": cfg.grid_size,
        "grid_eps": cfg.grid_eps,
        "seed": cfg.seed,
        "n_rows": matrix.n_rows(),
    });
    write_out(&out_file(cfg, "cv.json"), &pretty(&summary))?;
    println!("cv: alpha_star {alpha_star}");
    Ok(())
}

/// Ranking used by knockout and sweep-k: standardized |coefficients| of a
/// full-data OLS fit, clamped to the available feature count.
fn full_data_ranking(
    cfg: &RunConfig,
    m: &SplitMatrices,
    requested: usize,
    what: &str,
) -> Result<Vec<String>, CliError> {
    let p = m.whole.n_features();
    let k = if requested > p {
        eprintln!("warning: {what} {requested} exceeds feature count {p}; clamping to {p}");
        p
    } else {
        requested
    };
    let model = fit_ols(&m.whole, &fit_opts(cfg))?;
    Ok(rank_by_abs_coef(&model, k))
}

pub fn cmd_knockout(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let m = split_matrices(cfg, &data)?;
    let ranking = full_data_ranking(cfg, &m, cfg.top_k, "top_k")?;
    let report = knockout(&m.train, &m.test, &ranking, &fit_opts(cfg))?;

    write_out(&out_file(cfg, "knockout.csv"), &report.to_csv_string())?;
    write_out(&out_file(cfg, "knockout.json"), &report.to_json_string())?;

    let chart = Chart {
        title: "Importance analysis: test MSE with one feature removed",
        x_label: "feature rank",
        y_label: "MSE (kW^2)",
        series: vec![Series {
            label: "MSE without feature",
            points: report
                .rows
                .iter()
                .map(|r| (r.rank as f64, r.mse_without))
                .collect(),
            color: "steelblue",
            dashed: false,
        }],
        band: None,
        hline: Some((report.baseline_mse, "baseline (all features)")),
    };
    write_out(&out_file(cfg, "knockout.svg"), &chart.to_svg())?;
    println!(
        "knockout: baseline {} over {} features",
        report.baseline_mse,
        report.rows.len()
    );
    Ok(())
}

fn sweep_chart_series<'a>(
    points: &[SweepPoint],
    window: usize,
    smoothed_label: &'a str,
) -> Vec<Series<'a>> {
    let raw: Vec<(f64, f64)> = points.iter().map(|p| (p.x as f64, p.mse_mean)).collect();
    let mut series = vec![Series {
        label: "MSE",
        points: raw.clone(),
        color: "steelblue",
        dashed: false,
    }];
    if window > 1 {
        let values: Vec<f64> = raw.iter().map(|&(_, y)| y).collect();
        let smooth = moving_average(&values, window);
        series.push(Series {
            label: smoothed_label,
            points: raw.iter().map(|&(x, _)| x).zip(smooth).collect(),
            color: "firebrick",
            dashed: true,
        });
    }
    series
}

pub fn cmd_sweep_k(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let m = split_matrices(cfg, &data)?;
    let ranking = full_data_ranking(cfg, &m, cfg.k_max, "k_max")?;
    let sweep = sweep_top_k(&m.train, &m.test, &ranking, ranking.len(), &fit_opts(cfg))?;

    write_out(&out_file(cfg, "sweep_k.csv"), &sweep.sweep.to_csv_string())?;
    let label = format!("moving average (w={})", cfg.smooth_window);
    let chart = Chart {
        title: "Test MSE versus number of top-ranked features",
        x_label: "k (features used)",
        y_label: "MSE (kW^2)",
        series: sweep_chart_series(&sweep.sweep.points, cfg.smooth_window, &label),
        band: None,
        hline: None,
    };
    write_out(&out_file(cfg, "sweep_k.svg"), &chart.to_svg())?;
    println!("sweep-k: {} points", sweep.sweep.points.len());
    Ok(())
}

pub fn cmd_sweep_n(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let sizes = cfg
        .sizes
        .clone()
        .ok_or_else(|| CliError::Config("sweep-n needs --sizes or `sizes` in config".into()))?;
    let eval = SplitSpec { train_fraction: cfg.train_fraction, seed: cfg.seed };
    let sweep = sweep_sample_size(
        &data.dataset,
        &data.features,
        &data.target,
        &sizes,
        cfg.reps,
        cfg.seed,
        &eval,
        &fit_opts(cfg),
    )?;

    write_out(&out_file(cfg, "sweep_n.csv"), &sweep.to_csv_string())?;
    let label = format!("moving average (w={})", cfg.smooth_window);
    let band = (cfg.reps > 1).then(|| Band {
        points: sweep
            .points
            .iter()
            .map(|p| (p.x as f64, p.mse_mean - p.mse_std, p.mse_mean + p.mse_std))
            .collect(),
        color: "steelblue",
    });
    let chart = Chart {
        title: "Test MSE versus random sample size",
        x_label: "sample size (rows)",
        y_label: "MSE (kW^2)",
        series: sweep_chart_series(&sweep.points, cfg.smooth_window, &label),
        band,
        hline: None,
    };
    write_out(&out_file(cfg, "sweep_n.svg"), &chart.to_svg())?;
    println!("sweep-n: {} sizes x {} reps", sizes.len(), cfg.reps);
    Ok(())
}

pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load(cfg)?;
    let m = split_matrices(cfg, &data)?;
    let model = fit_ols(&m.train, &fit_opts(cfg))?;
    let pred = predict(&model, &m.test)?;

    // reporting is in watts; the model itself stays in kilowatts
    let measured_w: Vec<f64> = m.test.y().iter().map(|v| v * 1000.0).collect();
    let pred_w: Vec<f64> = pred.iter().map(|v| v * 1000.0).collect();
    let bins = bin_by_measured(&measured_w, &pred_w, cfg.bins);

    let mut csv = String::from("measured_center_w,pred_mean_w,pred_std_w,count\n");
    for b in &bins {
        csv.push_str(&format!("{},{},{},{}\n", b.center, b.pred_mean, b.pred_std, b.count));
    }
    write_out(&out_file(cfg, "pred_vs_measured.csv"), &csv)?;

    let lo = bins.iter().map(|b| b.center).fold(f64::INFINITY, f64::min);
    let hi = bins.iter().map(|b| b.center).fold(f64::NEG_INFINITY, f64::max);
    let chart = Chart {
        title: "Predicted versus measured PV power",
        x_label: "measured power (W, bin center)",
        y_label: "predicted power (W)",
        series: vec![
            Series {
                label: "bin mean prediction",
                points: bins.iter().map(|b| (b.center, b.pred_mean)).collect(),
                color: "steelblue",
                dashed: false,
            },
            Series {
                label: "measured = predicted",
                points: vec![(lo, lo), (hi, hi)],
                color: "gray",
                dashed: true,
            },
        ],
        band: Some(Band {
            points: bins
                .iter()
                .map(|b| (b.center, b.pred_mean - b.pred_std, b.pred_mean + b.pred_std))
                .collect(),
            color: "steelblue",
        }),
        hline: None,
    };
    write_out(&out_file(cfg, "pred_vs_measured.svg"), &chart.to_svg())?;
    println!("report: {} bins", bins.len());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let informative = args
        .informative
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (name, coef) = pair.split_once('=').ok_or_else(|| {
                CliError::Config(format!("bad informative entry `{pair}` (want name=coef)"))
            })?;
            let coef: f64 = coef.trim().parse().map_err(|_| {
                CliError::Config(format!("bad coefficient in informative entry `{pair}`"))
            })?;
            Ok((name.trim().to_string(), coef))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let nuisance: Vec<String> = args
        .nuisance
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();

    let spec = SynthSpec {
        n: args.n,
        informative,
        nuisance,
        noise_std: args.noise_std,
        feature_correlation: args.feature_correlation,
        include_forecast_block: args.forecast_block,
        seed: args.seed,
    };
    let (dataset, truth) = generate(&spec)?;

    let write = |name: &str, contents: &str| -> Result<(), CliError> {
        let path = args.out.join(name);
        write_atomic(&path, contents)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    };
    write("data.csv", &dataset.to_csv_string())?;
    write("schema.json", &dataset.schema().to_json_string())?;
    let truth_json = json!({
        "n": spec.n,
        "seed": spec.seed,
        "noise_std": truth.noise_std,
        "feature_correlation": spec.feature_correlation,
        "intercept": truth.intercept,
        "coefficients": truth.coefficients,
    });
    write("ground_truth.json", &pretty(&truth_json))?;
    println!(
        "synth: {} rows x {} columns",
        dataset.n_rows(),
        dataset.schema().columns().len()
    );
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

//! Config-driven experiment runner: per-city pipelines for every model
//! family, per-pair failure isolation, and deterministic artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tempcast_core::arima::{self, FitOptions};
use tempcast_core::ingest::{self, CityKey, Co2Record, TimeSeries};
use tempcast_core::lstm::{self, TrainConfig};
use tempcast_core::metrics::{self, EvalReport};
use tempcast_core::series;
use tempcast_core::snn::{self, LifConfig};

use crate::compare::{self, ComparisonEntry};
use crate::config::{ExperimentConfig, MetricsSpace, ModelKind, SplitMode};

/// Outcome record for one (city, model) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    pub city: String,
    pub country: String,
    pub model: String,
    pub status: String,
    pub reason: Option<String>,
    pub wall_time_ms: u64,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub pairs: Vec<PairRecord>,
}

impl RunManifest {
    pub fn all_success(&self) -> bool {
        self.pairs.iter().all(|p| p.status == "success")
    }

    /// Exit code contract: 0 all-success, 2 partial failures.
    pub fn exit_code(&self) -> i32 {
        if self.all_success() {
            0
        } else {
            2
        }
    }
}

struct PipelineOutput {
    artifacts: Vec<String>,
    report_scaled: EvalReport,
}

struct PairTask<'a> {
    key: &'a CityKey,
    model: ModelKind,
    dir_name: &'a str,
}

/// Execute the full experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate().context("invalid config")?;
    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("cannot create {}", config.output_dir.display()))?;

    let file = File::open(&config.data.temperature_csv).with_context(|| {
        format!(
            "cannot open temperature csv {}",
            config.data.temperature_csv.display()
        )
    })?;
    let records = ingest::parse_temperature_csv(BufReader::new(file))?;
    let buckets = ingest::split_by_city(&records)?;

    let co2: Option<Vec<Co2Record>> = match &config.data.co2_csv {
        Some(path) => {
            let file =
                File::open(path).with_context(|| format!("cannot open co2 csv {}", path.display()))?;
            Some(ingest::parse_co2_csv(
                BufReader::new(file),
                &config.data.co2_columns.to_core(),
            )?)
        }
        None => None,
    };

    let selected = select_cities(config, &buckets)?;
    let dir_names = unique_dir_names(&selected);
    let models = config.sorted_models();

    let mut tasks = Vec::new();
    for key in &selected {
        for &model in &models {
            tasks.push(PairTask {
                key,
                model,
                dir_name: &dir_names[key],
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("cannot build worker pool")?;
    let outcomes: Vec<(PairRecord, Option<f64>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| execute_pair(config, &buckets, co2.as_deref(), task))
            .collect()
    });

    let mut pairs = Vec::with_capacity(outcomes.len());
    let mut entries = Vec::new();
    for (record, scaled_mse) in outcomes {
        if let Some(mse) = scaled_mse {
            entries.push(ComparisonEntry {
                city: format!("{} ({})", record.city, record.country),
                model: record.model.clone(),
                mse,
            });
        }
        pairs.push(record);
    }

    compare::write_comparison(&config.output_dir, &entries)?;

    let manifest = RunManifest {
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        pairs,
    };
    fs::write(
        config.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}

fn execute_pair(
    config: &ExperimentConfig,
    buckets: &BTreeMap<CityKey, Vec<ingest::RawRecord>>,
    co2: Option<&[Co2Record]>,
    task: &PairTask,
) -> (PairRecord, Option<f64>) {
    let started = Instant::now();
    let result = run_pair_inner(config, buckets, co2, task);
    let wall_time_ms = started.elapsed().as_millis() as u64;
    let (status, reason, artifacts, mse) = match result {
        Ok(output) => (
            "success".to_string(),
            None,
            output.artifacts,
            Some(output.report_scaled.mse),
        ),
        Err(e) => {
            let insufficient = e
                .downcast_ref::<tempcast_core::Error>()
                .map(|core| matches!(core, tempcast_core::Error::InsufficientData(_)))
                .unwrap_or(false);
            if insufficient {
                ("skipped".to_string(), Some(format!("insufficient data: {e}")), vec![], None)
            } else {
                ("failed".to_string(), Some(format!("{e:#}")), vec![], None)
            }
        }
    };
    (
        PairRecord {
            city: task.key.city.clone(),
            country: task.key.country.clone(),
            model: task.model.name().to_string(),
            status,
            reason,
            wall_time_ms,
            artifacts,
        },
        mse,
    )
}

fn run_pair_inner(
    config: &ExperimentConfig,
    buckets: &BTreeMap<CityKey, Vec<ingest::RawRecord>>,
    co2: Option<&[Co2Record]>,
    task: &PairTask,
) -> Result<PipelineOutput> {
    let records = buckets
        .get(task.key)
        .ok_or_else(|| anyhow!("no records for {}", task.key))?;
    let series = ingest::repair_and_resample(records)?;
    let pair_dir = config
        .output_dir
        .join(task.dir_name)
        .join(task.model.name());
    fs::create_dir_all(&pair_dir)?;
    let rel_dir = format!("{}/{}", task.dir_name, task.model.name());

    let output = match task.model {
        ModelKind::Arima => arima_pipeline(config, &series, None, task, &pair_dir)?,
        ModelKind::Sarimax => {
            let co2 = co2.ok_or_else(|| anyhow!("sarimax requires a co2 csv in the config"))?;
            let exog = ingest::align_exogenous(&series, co2, &task.key.country)?;
            arima_pipeline(config, &series, Some((&exog, co2)), task, &pair_dir)?
        }
        ModelKind::Lstm => lstm_pipeline(config, &series, task, &pair_dir)?,
        ModelKind::Snn => snn_pipeline(config, &series, task, &pair_dir)?,
    };

    Ok(PipelineOutput {
        artifacts: output
            .artifacts
            .iter()
            .map(|name| format!("{rel_dir}/{name}"))
            .collect(),
        report_scaled: output.report_scaled,
    })
}

/// Seasonal-naive forecast: repeat the last observed season cyclically.
/// The minimum bar any model must beat.
pub fn seasonal_naive(train: &[f64], test_len: usize, period: usize) -> Vec<f64> {
    assert!(train.len() >= period, "training shorter than one season");
    let last_season = &train[train.len() - period..];
    (0..test_len).map(|j| last_season[j % period]).collect()
}

fn forecast_csv_header() -> &'static str {
    "date,period,actual,predicted,lower,upper"
}

struct ForecastRow {
    date: String,
    period: &'static str,
    actual: Option<f64>,
    predicted: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

fn write_forecast_csv(path: &Path, rows: &[ForecastRow]) -> Result<()> {
    let mut out = String::from(forecast_csv_header());
    out.push('\n');
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.date,
            row.period,
            fmt(row.actual),
            fmt(row.predicted),
            fmt(row.lower),
            fmt(row.upper)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_reports(
    pair_dir: &Path,
    space: MetricsSpace,
    scaled: &EvalReport,
    celsius: Option<&EvalReport>,
) -> Result<()> {
    let json = serde_json::json!({ "scaled": scaled, "celsius": celsius });
    fs::write(
        pair_dir.join("report.json"),
        serde_json::to_string_pretty(&json)? + "\n",
    )?;
    let row = match (space, celsius) {
        (MetricsSpace::Celsius, Some(report)) => report,
        _ => scaled,
    };
    fs::write(
        pair_dir.join("report.csv"),
        format!("{}\n{}\n", EvalReport::csv_header(), row.csv_row()),
    )?;
    Ok(())
}

fn arima_pipeline(
    config: &ExperimentConfig,
    series: &TimeSeries,
    exog: Option<(&TimeSeries, &[Co2Record])>,
    task: &PairTask,
    pair_dir: &Path,
) -> Result<PipelineOutput> {
    let model_cfg = match task.model {
        ModelKind::Sarimax => {
            let c = &config.sarimax;
            (c.spec(), c.max_iter, c.tol)
        }
        _ => {
            let c = &config.arima;
            (c.spec(false), c.max_iter, c.tol)
        }
    };
    let (spec, max_iter, tol) = model_cfg;
    let opts = FitOptions { max_iter, tol };

    let n = series.len();
    let train_len = n * 4 / 5;
    let train = series.head(train_len)?;
    let exog_series = exog.map(|(x, _)| x);
    let exog_train = exog_series.map(|x| x.head(train_len)).transpose()?;

    let fit = arima::fit_with(&train, &spec, exog_train.as_ref(), &opts)?;

    // One-step-ahead predictions over the full series; evaluated on the
    // chronological test tail.
    let preds = arima::one_step_predictions(&fit, series.values(), exog_series.map(|x| x.values()))?;
    let actual_test = &series.values()[train_len..];
    let pred_test = &preds[train_len..];
    if pred_test.iter().any(|p| !p.is_finite()) {
        bail!("one-step predictions undefined over the test region");
    }

    let m_celsius = metrics::evaluate(actual_test, pred_test)?;
    let scaler = series::fit_minmax(train.values())?;
    let m_scaled = metrics::evaluate(
        &scaler.apply_slice(actual_test),
        &scaler.apply_slice(pred_test),
    )?;

    // Future forecast continues from the end of the full series.
    let state = arima::with_data(&fit, series.values(), exog_series.map(|x| x.values()))?;
    let future_exog: Option<Vec<f64>> = match exog {
        Some((_, co2)) => {
            let months: Vec<_> = (0..config.horizon_months)
                .map(|h| series.start().plus_months(n + h))
                .collect();
            Some(ingest::exog_values_for_months(co2, &task.key.country, &months)?)
        }
        None => None,
    };
    let forecast = arima::forecast(&state, config.horizon_months, future_exog.as_deref())?;

    let half = 1.96 * fit.sigma2.sqrt();
    let mut rows = Vec::with_capacity(n + config.horizon_months);
    for t in 0..train_len {
        rows.push(ForecastRow {
            date: series.month_at(t).to_string(),
            period: "history",
            actual: Some(series.values()[t]),
            predicted: None,
            lower: None,
            upper: None,
        });
    }
    for (offset, (&actual, &pred)) in actual_test.iter().zip(pred_test).enumerate() {
        rows.push(ForecastRow {
            date: series.month_at(train_len + offset).to_string(),
            period: "test",
            actual: Some(actual),
            predicted: Some(pred),
            lower: Some(pred - half),
            upper: Some(pred + half),
        });
    }
    for h in 0..config.horizon_months {
        rows.push(ForecastRow {
            date: series.start().plus_months(n + h).to_string(),
            period: "future",
            actual: None,
            predicted: Some(forecast.point[h]),
            lower: Some(forecast.lower[h]),
            upper: Some(forecast.upper[h]),
        });
    }
    write_forecast_csv(&pair_dir.join("forecast.csv"), &rows)?;

    fs::write(
        pair_dir.join("checkpoint.json"),
        serde_json::to_string_pretty(&fit.summary())? + "\n",
    )?;

    let label = format!("{} ({})", task.key.city, task.key.country);
    let report_scaled = EvalReport::new(
        task.model.name(),
        &label,
        m_scaled,
        actual_test.len(),
        config.horizon_months,
    );
    let report_celsius = EvalReport::new(
        task.model.name(),
        &label,
        m_celsius,
        actual_test.len(),
        config.horizon_months,
    );
    write_reports(
        pair_dir,
        config.metrics_space,
        &report_scaled,
        Some(&report_celsius),
    )?;

    Ok(PipelineOutput {
        artifacts: vec![
            "report.json".into(),
            "report.csv".into(),
            "forecast.csv".into(),
            "checkpoint.json".into(),
        ],
        report_scaled,
    })
}

/// Raw indices consumed while fitting (scaler + training windows); in
/// chronological mode nothing may reach the test region.
fn training_touch_set(train_idx: &[usize], window: usize) -> BTreeSet<usize> {
    let mut touched = BTreeSet::new();
    for &i in train_idx {
        for j in i..=i + window {
            touched.insert(j);
        }
    }
    touched
}

fn audit_chronological_leak(
    touched: &BTreeSet<usize>,
    train_samples: usize,
    window: usize,
) -> Result<()> {
    let first_test_target = train_samples + window;
    if let Some(&max_touched) = touched.iter().next_back() {
        if max_touched >= first_test_target {
            bail!(
                "leakage: fitting touched raw index {max_touched}, test region starts at {first_test_target}"
            );
        }
    }
    Ok(())
}

fn lstm_pipeline(
    config: &ExperimentConfig,
    series: &TimeSeries,
    task: &PairTask,
    pair_dir: &Path,
) -> Result<PipelineOutput> {
    let cfg = &config.lstm;
    let values = series.values();
    let window = cfg.window_len;
    if values.len() < window + 5 {
        bail!(
            "series of {} months is too short for window {window}",
            values.len()
        );
    }
    let n_samples = values.len() - window;
    let shuffle = matches!(config.split_mode, SplitMode::Shuffled);
    let (train_idx, test_idx) = series::split_80_20(n_samples, shuffle, config.seed)?;

    let touched = training_touch_set(&train_idx, window);
    if !shuffle {
        audit_chronological_leak(&touched, train_idx.len(), window)?;
    }
    let touched_values: Vec<f64> = touched.iter().map(|&i| values[i]).collect();
    let scaler = series::fit_minmax(&touched_values)?;
    let scaled = scaler.apply_slice(values);

    let windows = series::make_windows(&scaled, window)?;
    let train_ds = windows.subset(&train_idx);
    let test_ds = windows.subset(&test_idx);

    let carve = (train_ds.len() as f64 * cfg.validation_fraction).floor() as usize;
    let effective_train = train_ds.len() - carve;
    let train_config = TrainConfig {
        epochs: cfg.epochs,
        window_len: window,
        batch_size: cfg.batch_size.min(effective_train.max(1)),
        seed: config.seed,
        validation_fraction: cfg.validation_fraction,
        learning_rate: cfg.learning_rate,
        hidden_size: cfg.hidden_size,
    };
    let (params, history) = lstm::train(&train_ds, &train_config)?;

    let mut preds_scaled = Vec::with_capacity(test_ds.len());
    for input in &test_ds.inputs {
        let (pred, _) = lstm::forward(&params, input)?;
        preds_scaled.push(pred);
    }
    let m_scaled = metrics::evaluate(&test_ds.targets, &preds_scaled)?;
    let actual_c = scaler.invert_slice(&test_ds.targets);
    let preds_c = scaler.invert_slice(&preds_scaled);
    let m_celsius = metrics::evaluate(&actual_c, &preds_c)?;

    let seed_window = scaled[scaled.len() - window..].to_vec();
    let future_scaled = lstm::forecast_recursive(&params, &seed_window, config.horizon_months)?;
    let future_c = scaler.invert_slice(&future_scaled);

    // Test rows ordered by date regardless of the split permutation.
    let mut order: Vec<usize> = (0..test_idx.len()).collect();
    order.sort_by_key(|&j| test_idx[j]);

    let mut rows = Vec::new();
    for t in 0..values.len() {
        rows.push(ForecastRow {
            date: series.month_at(t).to_string(),
            period: "history",
            actual: Some(values[t]),
            predicted: None,
            lower: None,
            upper: None,
        });
    }
    for &j in &order {
        let raw = test_idx[j] + window;
        rows.push(ForecastRow {
            date: series.month_at(raw).to_string(),
            period: "test",
            actual: Some(actual_c[j]),
            predicted: Some(preds_c[j]),
            lower: None,
            upper: None,
        });
    }
    for (h, &pred) in future_c.iter().enumerate() {
        rows.push(ForecastRow {
            date: series.start().plus_months(values.len() + h).to_string(),
            period: "future",
            actual: None,
            predicted: Some(pred),
            lower: None,
            upper: None,
        });
    }
    write_forecast_csv(&pair_dir.join("forecast.csv"), &rows)?;

    let mut loss = Vec::new();
    lstm::write_loss_csv(&history, &mut loss)?;
    fs::write(pair_dir.join("loss.csv"), loss)?;

    let checkpoint = File::create(pair_dir.join("checkpoint.json"))?;
    lstm::write_checkpoint(&params, checkpoint)?;

    let label = format!("{} ({})", task.key.city, task.key.country);
    let report_scaled = EvalReport::new(
        task.model.name(),
        &label,
        m_scaled,
        test_ds.len(),
        config.horizon_months,
    );
    let report_celsius = EvalReport::new(
        task.model.name(),
        &label,
        m_celsius,
        test_ds.len(),
        config.horizon_months,
    );
    write_reports(
        pair_dir,
        config.metrics_space,
        &report_scaled,
        Some(&report_celsius),
    )?;

    Ok(PipelineOutput {
        artifacts: vec![
            "report.json".into(),
            "report.csv".into(),
            "forecast.csv".into(),
            "loss.csv".into(),
            "checkpoint.json".into(),
        ],
        report_scaled,
    })
}

fn snn_pipeline(
    config: &ExperimentConfig,
    series: &TimeSeries,
    task: &PairTask,
    pair_dir: &Path,
) -> Result<PipelineOutput> {
    let cfg = &config.snn;
    let values = series.values();
    let window = cfg.time_window;
    if values.len() < window + 5 {
        bail!(
            "series of {} months is too short for window {window}",
            values.len()
        );
    }
    let n_samples = values.len() - window;
    let shuffle = matches!(config.split_mode, SplitMode::Shuffled);
    let (train_idx, test_idx) = series::split_80_20(n_samples, shuffle, config.seed)?;

    let touched = training_touch_set(&train_idx, window);
    if !shuffle {
        audit_chronological_leak(&touched, train_idx.len(), window)?;
    }
    let touched_values: Vec<f64> = touched.iter().map(|&i| values[i]).collect();
    let scaler = series::fit_minmax(&touched_values)?;
    let scaled = scaler.apply_slice(values);

    let windows = series::make_windows(&scaled, window)?;
    let batch = series::encode_latency(&windows, cfg.time_steps)?;
    let train_batch = batch.subset(&train_idx);
    let test_batch = batch.subset(&test_idx);

    let lif = LifConfig {
        threshold: cfg.threshold,
        beta: cfg.beta,
        alpha: cfg.alpha,
    };
    let carve = (train_batch.len() as f64 * cfg.validation_fraction).floor() as usize;
    let effective_train = train_batch.len() - carve;
    let train_config = TrainConfig {
        epochs: cfg.epochs,
        window_len: window,
        batch_size: cfg.batch_size.min(effective_train.max(1)),
        seed: config.seed,
        validation_fraction: cfg.validation_fraction,
        learning_rate: cfg.learning_rate,
        hidden_size: cfg.hidden_size,
    };
    let (params, history) = snn::train_snn(&train_batch, &train_config, &lif)?;

    let forecasts = snn::predict_batch(&params, &test_batch)?;
    let actual: Vec<f64> = test_batch.binary_targets.iter().map(|&y| f64::from(y)).collect();
    let predicted: Vec<f64> = forecasts
        .iter()
        .map(|f| f64::from(f.binary_prediction))
        .collect();
    let m_binary = metrics::evaluate(&actual, &predicted)?;

    let mut order: Vec<usize> = (0..test_idx.len()).collect();
    order.sort_by_key(|&j| test_idx[j]);
    let mut rows = Vec::new();
    for &j in &order {
        let raw = test_idx[j] + window;
        rows.push(ForecastRow {
            date: series.month_at(raw).to_string(),
            period: "test",
            actual: Some(actual[j]),
            predicted: Some(predicted[j]),
            lower: None,
            upper: None,
        });
    }
    write_forecast_csv(&pair_dir.join("forecast.csv"), &rows)?;

    let mut loss = Vec::new();
    lstm::write_loss_csv(&history, &mut loss)?;
    fs::write(pair_dir.join("loss.csv"), loss)?;

    let checkpoint = File::create(pair_dir.join("checkpoint.json"))?;
    snn::write_checkpoint(&params, checkpoint)?;

    // Spike raster for the first few test samples.
    let raster_n = test_batch.len().min(8);
    let raster = test_batch.subset(&(0..raster_n).collect::<Vec<_>>());
    let mut raster_csv = Vec::new();
    raster.write_raster_csv(&mut raster_csv)?;
    fs::write(pair_dir.join("raster.csv"), raster_csv)?;

    // Binary outputs have no Celsius-space reading.
    let label = format!("{} ({})", task.key.city, task.key.country);
    let report_scaled = EvalReport::new(task.model.name(), &label, m_binary, test_batch.len(), 0);
    write_reports(pair_dir, config.metrics_space, &report_scaled, None)?;

    Ok(PipelineOutput {
        artifacts: vec![
            "report.json".into(),
            "report.csv".into(),
            "forecast.csv".into(),
            "loss.csv".into(),
            "checkpoint.json".into(),
            "raster.csv".into(),
        ],
        report_scaled,
    })
}

fn select_cities(
    config: &ExperimentConfig,
    buckets: &BTreeMap<CityKey, Vec<ingest::RawRecord>>,
) -> Result<Vec<CityKey>> {
    match config.cities.random_count()? {
        Some(k) => {
            let mut keys: Vec<CityKey> = buckets.keys().cloned().collect();
            if keys.len() < k {
                bail!("requested {k} random cities, dataset has {}", keys.len());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            keys.shuffle(&mut rng);
            keys.truncate(k);
            keys.sort();
            Ok(keys)
        }
        None => {
            let entries = match &config.cities {
                crate::config::CitySelection::List(list) => list,
                crate::config::CitySelection::Random(_) => unreachable!(),
            };
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for entry in entries {
                let key = resolve_city(entry, buckets)?;
                if !seen.insert(key.clone()) {
                    bail!("city `{entry}` listed twice");
                }
                out.push(key);
            }
            out.sort();
            Ok(out)
        }
    }
}

/// Match `"City"` or `"City,Country"` against the dataset, byte-exact
/// after trimming.
fn resolve_city(
    entry: &str,
    buckets: &BTreeMap<CityKey, Vec<ingest::RawRecord>>,
) -> Result<CityKey> {
    let (city, country) = match entry.split_once(',') {
        Some((c, k)) => (c.trim(), Some(k.trim())),
        None => (entry.trim(), None),
    };
    let matches: Vec<&CityKey> = buckets
        .keys()
        .filter(|key| key.city == city && country.map_or(true, |k| key.country == k))
        .collect();
    match matches.len() {
        0 => bail!("city `{entry}` not found in the temperature file"),
        1 => Ok(matches[0].clone()),
        _ => bail!(
            "city `{entry}` is ambiguous; qualify it as one of: {}",
            matches
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        ),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn unique_dir_names(cities: &[CityKey]) -> BTreeMap<CityKey, String> {
    let mut by_name: BTreeMap<String, Vec<&CityKey>> = BTreeMap::new();
    for key in cities {
        by_name.entry(sanitize(&key.city)).or_default().push(key);
    }
    let mut out = BTreeMap::new();
    for (name, keys) in by_name {
        if keys.len() == 1 {
            out.insert(keys[0].clone(), name);
        } else {
            for key in keys {
                out.insert(
                    key.clone(),
                    format!("{}__{}", sanitize(&key.city), sanitize(&key.country)),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seasonal_naive_repeats_last_season() {
        let train: Vec<f64> = (0..24).map(|i| i as f64).collect();
        let preds = seasonal_naive(&train, 15, 12);
        assert_eq!(preds[0], 12.0);
        assert_eq!(preds[11], 23.0);
        assert_eq!(preds[12], 12.0);
        assert_eq!(preds[14], 14.0);
    }

    #[test]
    fn touch_set_and_leak_audit() {
        let touched = training_touch_set(&[0, 1, 2], 3);
        assert_eq!(touched.iter().next_back(), Some(&5));
        // Train samples 0..3 with window 3: first test target is 6.
        assert!(audit_chronological_leak(&touched, 3, 3).is_ok());
        let bad = training_touch_set(&[0, 1, 2, 3], 3);
        assert!(audit_chronological_leak(&bad, 3, 3).is_err());
    }

    #[test]
    fn sanitize_makes_path_safe_names() {
        assert_eq!(sanitize("New York"), "New_York");
        assert_eq!(sanitize("Bac Lieu"), "Bac_Lieu");
        assert_eq!(sanitize("S\u{e3}o Paulo"), "S_o_Paulo");
    }
}

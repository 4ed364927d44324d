//! End-to-end runner behavior on synthetic datasets.

use std::fs;
use std::path::Path;

use tempcast_harness::config::ExperimentConfig;
use tempcast_harness::plots::emit_plots;
use tempcast_harness::runner::run;
use tempcast_harness::synth::{write_co2_csv, write_temperature_csv, SynthCity};

fn config_json(dir: &Path, cities: &[&str], models: &[&str], extra: &str) -> String {
    format!(
        r#"{{
            "data": {{
                "temperature_csv": "{temps}",
                "co2_csv": "{co2}"
            }},
            "cities": [{cities}],
            "models": [{models}],
            "split_mode": "chronological",
            "seed": 11,
            "horizon_months": 24,
            "output_dir": "{out}"
            {extra}
        }}"#,
        temps = dir.join("temps.csv").display(),
        co2 = dir.join("co2.csv").display(),
        cities = cities
            .iter()
            .map(|c| format!("\"{c}\""))
            .collect::<Vec<_>>()
            .join(","),
        models = models
            .iter()
            .map(|m| format!("\"{m}\""))
            .collect::<Vec<_>>()
            .join(","),
        out = dir.join("run").display(),
    )
}

fn write_dataset(dir: &Path, cities: &[SynthCity]) {
    write_temperature_csv(&dir.join("temps.csv"), cities).unwrap();
    write_co2_csv(&dir.join("co2.csv"), cities).unwrap();
}

#[test]
fn smallest_run_produces_manifest_report_and_forecast() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &[SynthCity::new("Solo", "Soland", 20, 3)]);
    let config =
        ExperimentConfig::from_json(&config_json(dir.path(), &["Solo"], &["arima"], "")).unwrap();
    let manifest = run(&config).unwrap();

    assert_eq!(manifest.pairs.len(), 1);
    assert_eq!(manifest.pairs[0].status, "success");
    assert_eq!(manifest.exit_code(), 0);

    let pair_dir = dir.path().join("run/Solo/arima");
    assert!(pair_dir.join("report.json").exists());
    assert!(pair_dir.join("forecast.csv").exists());
    assert!(pair_dir.join("checkpoint.json").exists());
    assert!(dir.path().join("run/comparison.csv").exists());
    assert!(dir.path().join("run/manifest.json").exists());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(pair_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["scaled"]["mse"].as_f64().unwrap() >= 0.0);
    assert!(report["celsius"]["mse"].as_f64().unwrap() >= 0.0);

    // Horizon rows appear after the test rows.
    let forecast = fs::read_to_string(pair_dir.join("forecast.csv")).unwrap();
    assert_eq!(forecast.lines().filter(|l| l.contains(",future,")).count(), 24);
}

#[test]
fn short_series_is_skipped_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut short = SynthCity::new("Tiny", "Testland", 2, 5);
    short.months = 18;
    let ok = SynthCity::new("Big", "Testland", 20, 6);
    write_dataset(dir.path(), &[short, ok]);
    let config = ExperimentConfig::from_json(&config_json(
        dir.path(),
        &["Tiny", "Big"],
        &["arima"],
        "",
    ))
    .unwrap();
    let manifest = run(&config).unwrap();

    assert_eq!(manifest.pairs.len(), 2);
    let tiny = manifest.pairs.iter().find(|p| p.city == "Tiny").unwrap();
    assert_eq!(tiny.status, "skipped");
    assert!(tiny.reason.as_ref().unwrap().contains("insufficient data"));
    let big = manifest.pairs.iter().find(|p| p.city == "Big").unwrap();
    assert_eq!(big.status, "success");
    assert_eq!(manifest.exit_code(), 2);
}

#[test]
fn two_statistical_models_fill_one_comparison_row() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &[SynthCity::new("Duo", "Duland", 25, 8)]);
    let config = ExperimentConfig::from_json(&config_json(
        dir.path(),
        &["Duo"],
        &["arima", "sarimax"],
        r#", "arima": {"p": 2, "d": 1, "q": 1}, "sarimax": {"p": 2, "d": 1, "q": 1, "seasonal": {"cap_p": 1, "cap_d": 0, "cap_q": 1, "period": 12}}"#,
    ))
    .unwrap();
    let manifest = run(&config).unwrap();
    assert!(manifest.all_success(), "{:?}", manifest.pairs);

    let csv = fs::read_to_string(dir.path().join("run/comparison.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "one header plus one city row");
    assert!(lines[0].contains("arima_mse"));
    assert!(lines[0].contains("sarimax_mse"));
    let cells = lines[1].split(',').count();
    assert_eq!(cells, 6, "city + two model groups + best_model");
}

#[test]
fn plots_cover_available_artifacts_only() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &[SynthCity::new("Plotsville", "Ploland", 20, 4)]);
    let config = ExperimentConfig::from_json(&config_json(
        dir.path(),
        &["Plotsville"],
        &["arima"],
        "",
    ))
    .unwrap();
    run(&config).unwrap();

    let written = emit_plots(&dir.path().join("run")).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"forecast.svg".to_string()));
    // No loss history for a statistical model, no paired overlay without
    // a sarimax run.
    assert!(!names.contains(&"loss.svg".to_string()));
    assert!(!names.contains(&"sarimax_vs_arima.svg".to_string()));

    // Determinism: a second invocation rewrites identical bytes.
    let before = fs::read(dir.path().join("run/Plotsville/arima/forecast.svg")).unwrap();
    emit_plots(&dir.path().join("run")).unwrap();
    let after = fs::read(dir.path().join("run/Plotsville/arima/forecast.svg")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn paired_overlay_needs_both_statistical_models() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &[SynthCity::new("Pair", "Parland", 25, 2)]);
    let config = ExperimentConfig::from_json(&config_json(
        dir.path(),
        &["Pair"],
        &["arima", "sarimax"],
        r#", "arima": {"p": 1, "d": 1, "q": 1}, "sarimax": {"p": 1, "d": 1, "q": 1, "seasonal": null}"#,
    ))
    .unwrap();
    let manifest = run(&config).unwrap();
    assert!(manifest.all_success(), "{:?}", manifest.pairs);
    let written = emit_plots(&dir.path().join("run")).unwrap();
    assert!(written
        .iter()
        .any(|p| p.ends_with("Pair/sarimax_vs_arima.svg")));
}

#[test]
fn random_city_selection_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cities: Vec<SynthCity> = (0..6)
        .map(|i| SynthCity::new(&format!("R{i}"), "Rland", 20, i as u64))
        .collect();
    write_dataset(dir.path(), &cities);
    let json = config_json(dir.path(), &[], &["arima"], "").replace("[]", "\"random:2\"");
    let config = ExperimentConfig::from_json(&json).unwrap();
    let a = run(&config).unwrap();
    let b = run(&config).unwrap();
    let names_a: Vec<&String> = a.pairs.iter().map(|p| &p.city).collect();
    let names_b: Vec<&String> = b.pairs.iter().map(|p| &p.city).collect();
    assert_eq!(names_a, names_b);
    assert_eq!(a.pairs.len(), 2);
}

#[test]
fn unknown_city_is_a_fatal_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &[SynthCity::new("Here", "Hland", 20, 1)]);
    let config = ExperimentConfig::from_json(&config_json(
        dir.path(),
        &["Elsewhere"],
        &["arima"],
        "",
    ))
    .unwrap();
    let err = run(&config).unwrap_err();
    assert!(err.to_string().contains("Elsewhere"));
}

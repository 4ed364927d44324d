//! Aggregate comparison table: per-city rows, one column group per model,
//! best-model ranking by scaled-space MSE.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::runner::RunManifest;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonEntry {
    pub city: String,
    pub model: String,
    pub mse: f64,
}

/// CSV text: `city,<m>_mse,<m>_rank,...,best_model`, cities and models
/// sorted by name. Ties in MSE rank by model name.
pub fn comparison_csv(entries: &[ComparisonEntry]) -> String {
    let models: BTreeSet<&str> = entries.iter().map(|e| e.model.as_str()).collect();
    let grouped = group_by_city(entries);

    let mut out = String::from("city");
    for model in &models {
        out.push_str(&format!(",{model}_mse,{model}_rank"));
    }
    out.push_str(",best_model\n");

    for (city, row) in &grouped {
        let ranks = rank_models(row);
        out.push_str(city);
        for model in &models {
            match row.get(*model) {
                Some(mse) => out.push_str(&format!(",{mse},{}", ranks[*model])),
                None => out.push_str(",,"),
            }
        }
        let best = ranks
            .iter()
            .find(|(_, &rank)| rank == 1)
            .map(|(name, _)| name.as_str())
            .unwrap_or("");
        out.push_str(&format!(",{best}\n"));
    }
    out
}

pub fn comparison_json(entries: &[ComparisonEntry]) -> Result<String> {
    let grouped = group_by_city(entries);
    let rows: Vec<Value> = grouped
        .iter()
        .map(|(city, row)| {
            let ranks = rank_models(row);
            let models: BTreeMap<String, Value> = row
                .iter()
                .map(|(model, mse)| {
                    (
                        model.clone(),
                        serde_json::json!({ "mse": mse, "rank": ranks[model] }),
                    )
                })
                .collect();
            let best = ranks
                .iter()
                .find(|(_, &rank)| rank == 1)
                .map(|(name, _)| name.clone());
            serde_json::json!({ "city": city, "models": models, "best_model": best })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

fn group_by_city(entries: &[ComparisonEntry]) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut grouped: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for e in entries {
        grouped
            .entry(e.city.clone())
            .or_default()
            .insert(e.model.clone(), e.mse);
    }
    grouped
}

fn rank_models(row: &BTreeMap<String, f64>) -> BTreeMap<String, usize> {
    let mut order: Vec<(&String, &f64)> = row.iter().collect();
    order.sort_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, (name, _))| (name.clone(), i + 1))
        .collect()
}

pub fn write_comparison(dir: &Path, entries: &[ComparisonEntry]) -> Result<()> {
    fs::write(dir.join("comparison.csv"), comparison_csv(entries))?;
    fs::write(dir.join("comparison.json"), comparison_json(entries)?)?;
    Ok(())
}

/// Rebuild the comparison entries of a completed run from its report
/// files (scaled-space MSE).
pub fn entries_from_run_dir(run_dir: &Path) -> Result<Vec<ComparisonEntry>> {
    let manifest_path = run_dir.join("manifest.json");
    let manifest: RunManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .with_context(|| format!("missing {}", manifest_path.display()))?,
    )?;
    let mut entries = Vec::new();
    for pair in &manifest.pairs {
        if pair.status != "success" {
            continue;
        }
        let report_rel = pair
            .artifacts
            .iter()
            .find(|a| a.ends_with("report.json"))
            .with_context(|| format!("no report.json recorded for {}/{}", pair.city, pair.model))?;
        let path = run_dir.join(report_rel);
        let value: Value = serde_json::from_str(
            &fs::read_to_string(&path).with_context(|| format!("missing {}", path.display()))?,
        )?;
        let mse = value["scaled"]["mse"]
            .as_f64()
            .with_context(|| format!("no scaled mse in {}", path.display()))?;
        entries.push(ComparisonEntry {
            city: format!("{} ({})", pair.city, pair.country),
            model: pair.model.clone(),
            mse,
        });
    }
    if entries.is_empty() {
        bail!("run dir has no successful pairs to compare");
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(city: &str, model: &str, mse: f64) -> ComparisonEntry {
        ComparisonEntry {
            city: city.into(),
            model: model.into(),
            mse,
        }
    }

    #[test]
    fn csv_rows_rank_by_mse() {
        let entries = vec![
            entry("Irkutsk", "snn", 0.0257),
            entry("Irkutsk", "lstm", 0.0021),
            entry("Irkutsk", "arima", 0.013),
        ];
        let csv = comparison_csv(&entries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "city,arima_mse,arima_rank,lstm_mse,lstm_rank,snn_mse,snn_rank,best_model"
        );
        assert_eq!(lines[1], "Irkutsk,0.013,2,0.0021,1,0.0257,3,lstm");
    }

    #[test]
    fn single_model_ranks_first() {
        let csv = comparison_csv(&[entry("Berlin", "arima", 0.5)]);
        assert!(csv.lines().nth(1).unwrap().ends_with(",1,arima"));
    }

    #[test]
    fn ties_break_by_model_name() {
        let entries = vec![entry("X", "snn", 0.5), entry("X", "arima", 0.5)];
        let csv = comparison_csv(&entries);
        // Equal MSE: alphabetical order wins.
        assert!(csv.lines().nth(1).unwrap().ends_with(",arima"));
    }

    #[test]
    fn missing_models_leave_empty_cells() {
        let entries = vec![
            entry("A", "arima", 0.1),
            entry("B", "arima", 0.2),
            entry("B", "lstm", 0.05),
        ];
        let csv = comparison_csv(&entries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "A,0.1,1,,,arima");
        assert_eq!(lines[2], "B,0.2,2,0.05,1,lstm");
    }
}

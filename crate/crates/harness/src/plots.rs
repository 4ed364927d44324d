//! Deterministic SVG plots rendered from a completed run directory: no
//! timestamps, stable float formatting, byte-identical across invocations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::runner::RunManifest;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 48.0;

struct Polyline {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

/// (x, lower, upper) triples shading an uncertainty region.
type Band = Vec<(f64, f64, f64)>;

#[derive(Debug, Clone, Default)]
struct ForecastRows {
    dates: Vec<String>,
    periods: Vec<String>,
    actual: Vec<Option<f64>>,
    predicted: Vec<Option<f64>>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

fn parse_forecast_csv(path: &Path) -> Result<ForecastRows> {
    let text =
        fs::read_to_string(path).with_context(|| format!("missing artifact {}", path.display()))?;
    let mut rows = ForecastRows::default();
    let parse = |cell: &str| -> Option<f64> {
        if cell.is_empty() {
            None
        } else {
            cell.parse().ok()
        }
    };
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            bail!("malformed forecast row in {}: `{line}`", path.display());
        }
        rows.dates.push(cells[0].to_string());
        rows.periods.push(cells[1].to_string());
        rows.actual.push(parse(cells[2]));
        rows.predicted.push(parse(cells[3]));
        rows.lower.push(parse(cells[4]));
        rows.upper.push(parse(cells[5]));
    }
    Ok(rows)
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn line_chart(
    title: &str,
    x_ticks: &[(f64, String)],
    lines: &[Polyline],
    band: Option<&Band>,
) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for line in lines {
        for &(x, y) in &line.points {
            xs.push(x);
            ys.push(y);
        }
    }
    if let Some(band) = band {
        for &(x, lo, hi) in band {
            xs.push(x);
            ys.push(lo);
            ys.push(hi);
        }
    }
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    let x_span = (x_max - x_min).max(1e-9);
    let y_span = (y_max - y_min).max(1e-9);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / x_span * plot_w;
    let py = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / y_span * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        fmt(WIDTH / 2.0),
        title
    ));

    if let Some(band) = band {
        if band.len() > 1 {
            let mut d = String::new();
            for (i, &(x, lo, _)) in band.iter().enumerate() {
                d.push_str(if i == 0 { "M" } else { "L" });
                d.push_str(&format!("{},{} ", fmt(px(x)), fmt(py(lo))));
            }
            for &(x, _, hi) in band.iter().rev() {
                d.push_str(&format!("L{},{} ", fmt(px(x)), fmt(py(hi))));
            }
            d.push('Z');
            svg.push_str(&format!(
                "<path d=\"{d}\" fill=\"#d62728\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
            ));
        }
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = fmt(MARGIN_LEFT),
        t = fmt(MARGIN_TOP),
        b = fmt(MARGIN_TOP + plot_h),
        r = fmt(MARGIN_LEFT + plot_w),
    ));
    for frac in [0.0, 0.5, 1.0] {
        let y = y_min + frac * y_span;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_LEFT - 6.0),
            fmt(py(y) + 4.0),
            fmt(y)
        ));
    }
    for (x, label) in x_ticks {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            fmt(px(*x)),
            fmt(MARGIN_TOP + plot_h + 18.0),
            label
        ));
    }

    for line in lines {
        if line.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, &(x, y)) in line.points.iter().enumerate() {
            d.push_str(if i == 0 { "M" } else { "L" });
            d.push_str(&format!("{},{} ", fmt(px(x)), fmt(py(y))));
        }
        let dash = if line.dashed {
            " stroke-dasharray=\"5,3\""
        } else {
            ""
        };
        svg.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>\n",
            d.trim_end(),
            line.color
        ));
    }

    for (i, line) in lines.iter().enumerate() {
        let y = MARGIN_TOP + 14.0 + i as f64 * 16.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(MARGIN_LEFT + 10.0),
            fmt(y - 4.0),
            fmt(MARGIN_LEFT + 34.0),
            fmt(y - 4.0),
            line.color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt(MARGIN_LEFT + 40.0),
            fmt(y),
            line.label
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min.is_finite() && max.is_finite() {
        (min, max)
    } else {
        (0.0, 1.0)
    }
}

fn date_ticks(dates: &[String]) -> Vec<(f64, String)> {
    if dates.is_empty() {
        return vec![];
    }
    let n = dates.len();
    let positions = [0, n / 4, n / 2, 3 * n / 4, n - 1];
    let mut ticks = Vec::new();
    let mut last = usize::MAX;
    for &p in &positions {
        if p != last {
            ticks.push((p as f64, dates[p].clone()));
            last = p;
        }
    }
    ticks
}

fn forecast_overlay(title: &str, rows: &ForecastRows) -> String {
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    let mut band: Band = Vec::new();
    for i in 0..rows.dates.len() {
        let x = i as f64;
        if let Some(a) = rows.actual[i] {
            actual.push((x, a));
        }
        if let Some(p) = rows.predicted[i] {
            predicted.push((x, p));
        }
        if let (Some(lo), Some(hi)) = (rows.lower[i], rows.upper[i]) {
            band.push((x, lo, hi));
        }
    }
    let lines = vec![
        Polyline {
            label: "actual".into(),
            color: "#1f77b4",
            dashed: false,
            points: actual,
        },
        Polyline {
            label: "predicted".into(),
            color: "#d62728",
            dashed: true,
            points: predicted,
        },
    ];
    let band_opt = if band.is_empty() { None } else { Some(&band) };
    line_chart(title, &date_ticks(&rows.dates), &lines, band_opt)
}

fn loss_chart(title: &str, path: &Path) -> Result<String> {
    let text =
        fs::read_to_string(path).with_context(|| format!("missing artifact {}", path.display()))?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            bail!("malformed loss row in {}: `{line}`", path.display());
        }
        let epoch: f64 = cells[0].parse().context("bad epoch")?;
        if let Ok(t) = cells[1].parse::<f64>() {
            train.push((epoch, t));
        }
        if let Ok(v) = cells[2].parse::<f64>() {
            val.push((epoch, v));
        }
    }
    let n = train.len().max(2);
    let ticks: Vec<(f64, String)> = [0, n / 2, n - 1]
        .iter()
        .map(|&e| (e as f64, e.to_string()))
        .collect();
    let mut lines = vec![Polyline {
        label: "train loss".into(),
        color: "#1f77b4",
        dashed: false,
        points: train,
    }];
    if !val.is_empty() {
        lines.push(Polyline {
            label: "validation loss".into(),
            color: "#ff7f0e",
            dashed: false,
            points: val,
        });
    }
    Ok(line_chart(title, &ticks, &lines, None))
}

/// Render every plot a completed run supports: per-pair forecast overlays
/// and loss curves, plus a SARIMAX-vs-ARIMA overlay per city when both
/// models succeeded.
pub fn emit_plots(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest_path = run_dir.join("manifest.json");
    let manifest: RunManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path)
            .with_context(|| format!("missing {}", manifest_path.display()))?,
    )?;

    let mut written = Vec::new();
    // city display name -> (model -> forecast rows)
    let mut by_city: BTreeMap<String, BTreeMap<String, ForecastRows>> = BTreeMap::new();
    let mut city_dirs: BTreeMap<String, PathBuf> = BTreeMap::new();

    for pair in &manifest.pairs {
        if pair.status != "success" {
            continue;
        }
        let forecast_rel = pair
            .artifacts
            .iter()
            .find(|a| a.ends_with("forecast.csv"))
            .with_context(|| format!("no forecast.csv recorded for {}/{}", pair.city, pair.model))?;
        let forecast_path = run_dir.join(forecast_rel);
        let rows = parse_forecast_csv(&forecast_path)?;
        let pair_dir = forecast_path
            .parent()
            .context("artifact path has no parent")?
            .to_path_buf();

        let title = format!("{}, {} - {}", pair.city, pair.country, pair.model);
        let svg = forecast_overlay(&title, &rows);
        let out = pair_dir.join("forecast.svg");
        fs::write(&out, svg)?;
        written.push(out);

        if let Some(loss_rel) = pair.artifacts.iter().find(|a| a.ends_with("loss.csv")) {
            let svg = loss_chart(
                &format!("{}, {} - {} loss", pair.city, pair.country, pair.model),
                &run_dir.join(loss_rel),
            )?;
            let out = pair_dir.join("loss.svg");
            fs::write(&out, svg)?;
            written.push(out);
        }

        let city_label = format!("{}, {}", pair.city, pair.country);
        if let Some(city_dir) = pair_dir.parent() {
            city_dirs.insert(city_label.clone(), city_dir.to_path_buf());
        }
        by_city
            .entry(city_label)
            .or_default()
            .insert(pair.model.clone(), rows);
    }

    // Paired CO2 overlay when both fits exist for a city.
    for (city, models) in &by_city {
        let (Some(arima), Some(sarimax)) = (models.get("arima"), models.get("sarimax")) else {
            continue;
        };
        let mut actual = Vec::new();
        let mut with_co2 = Vec::new();
        let mut without_co2 = Vec::new();
        for i in 0..arima.dates.len() {
            let x = i as f64;
            if arima.periods[i] == "history" {
                continue;
            }
            if let Some(a) = arima.actual[i] {
                actual.push((x, a));
            }
            if let Some(p) = arima.predicted[i] {
                without_co2.push((x, p));
            }
        }
        for i in 0..sarimax.dates.len() {
            if sarimax.periods[i] == "history" {
                continue;
            }
            if let Some(p) = sarimax.predicted[i] {
                with_co2.push((i as f64, p));
            }
        }
        let lines = vec![
            Polyline {
                label: "actual".into(),
                color: "#1f77b4",
                dashed: false,
                points: actual,
            },
            Polyline {
                label: "sarimax (with co2)".into(),
                color: "#2ca02c",
                dashed: true,
                points: with_co2,
            },
            Polyline {
                label: "arima (without co2)".into(),
                color: "#d62728",
                dashed: true,
                points: without_co2,
            },
        ];
        let svg = line_chart(
            &format!("{city} - with vs without CO2"),
            &date_ticks(&arima.dates),
            &lines,
            None,
        );
        let out = city_dirs[city].join("sarimax_vs_arima.svg");
        fs::write(&out, svg)?;
        written.push(out);
    }

    written.sort();
    Ok(written)
}

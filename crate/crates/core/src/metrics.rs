//! Evaluation metrics: MSE, RMSE, MAE, R-squared, explained variance, and
//! the misclassification rate for binary forecasts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metric bundle for one prediction vector. On a constant truth vector
/// `r_squared` and `explained_variance` are undefined and reported as NaN
/// (serialized as `null`); the error metrics are still computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub r_squared: f64,
    pub explained_variance: f64,
}

pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.is_empty() {
        return Err(Error::Validation("empty evaluation vectors".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    let n = y_true.len() as f64;
    let errors: Vec<f64> = y_true.iter().zip(y_pred).map(|(t, p)| t - p).collect();

    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / n;

    let mean_true = y_true.iter().sum::<f64>() / n;
    let var_true = y_true
        .iter()
        .map(|t| (t - mean_true) * (t - mean_true))
        .sum::<f64>()
        / n;
    let (r_squared, explained_variance) = if var_true <= 0.0 {
        (f64::NAN, f64::NAN)
    } else {
        let mean_err = errors.iter().sum::<f64>() / n;
        let var_err = errors
            .iter()
            .map(|e| (e - mean_err) * (e - mean_err))
            .sum::<f64>()
            / n;
        (1.0 - mse / var_true, 1.0 - var_err / var_true)
    };

    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        mae,
        r_squared,
        explained_variance,
    })
}

/// Misclassification rate, which equals the MAE of binary vectors.
pub fn evaluate_binary(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} true vs {} predicted",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Validation("empty evaluation vectors".into()));
    }
    for &v in y_true.iter().chain(y_pred) {
        if v != 0.0 && v != 1.0 {
            return Err(Error::Validation(format!("non-binary value {v}")));
        }
    }
    Ok(y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).abs())
        .sum::<f64>()
        / y_true.len() as f64)
}

/// Per-model, per-city metric bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub city: String,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub r_squared: f64,
    pub explained_variance: f64,
    pub n_points: usize,
    pub horizon_months: usize,
}

impl EvalReport {
    pub fn new(
        model_name: impl Into<String>,
        city: impl Into<String>,
        metrics: Metrics,
        n_points: usize,
        horizon_months: usize,
    ) -> Self {
        Self {
            model_name: model_name.into(),
            city: city.into(),
            mse: metrics.mse,
            rmse: metrics.rmse,
            mae: metrics.mae,
            r_squared: metrics.r_squared,
            explained_variance: metrics.explained_variance,
            n_points,
            horizon_months,
        }
    }

    pub fn csv_header() -> &'static str {
        "model,city,n,horizon,mse,rmse,mae,r2,ev"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.model_name,
            self.city,
            self.n_points,
            self.horizon_months,
            self.mse,
            self.rmse,
            self.mae,
            self.r_squared,
            self.explained_variance
        )
    }
}

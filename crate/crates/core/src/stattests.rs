//! Ordinary least squares and the Augmented Dickey-Fuller unit-root test.

use crate::error::{Error, Result};

/// ADF critical values for the constant-only regression (asymptotic).
pub const ADF_CRIT_1PCT: f64 = -3.43;
pub const ADF_CRIT_5PCT: f64 = -2.86;
pub const ADF_CRIT_10PCT: f64 = -2.57;

/// Least-squares fit of `y` on the columns of a design matrix.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub n_obs: usize,
    pub df_resid: usize,
}

/// Solve the least-squares problem via Householder QR.
///
/// `x` holds one row per observation. Requires more rows than columns and
/// full column rank.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let m = x.len();
    if m != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{m} design rows vs {} responses",
            y.len()
        )));
    }
    if m == 0 {
        return Err(Error::Validation("empty design matrix".into()));
    }
    let k = x[0].len();
    if k == 0 || x.iter().any(|row| row.len() != k) {
        return Err(Error::ShapeMismatch("ragged design matrix".into()));
    }
    if m <= k {
        return Err(Error::Validation(format!(
            "need more rows than columns, got {m} rows x {k} cols"
        )));
    }

    // Column-major working copy; `qty` accumulates Q^T y in place.
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| x.iter().map(|row| row[j]).collect()).collect();
    let mut qty = y.to_vec();

    let col_scale = a
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
        .max(1.0);

    for j in 0..k {
        // Householder reflector for column j below the diagonal.
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * col_scale {
            return Err(Error::SingularDesign);
        }
        let alpha = if a[j][j] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(j) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (vi, ci) in v.iter().zip(col[j..].iter_mut()) {
                    *ci -= f * vi;
                }
            }
            let dot: f64 = v.iter().zip(&qty[j..]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (vi, qi) in v.iter().zip(qty[j..].iter_mut()) {
                *qi -= f * vi;
            }
        }
        a[j][j] = alpha;
        if a[j][j].abs() <= 1e-10 * col_scale {
            return Err(Error::SingularDesign);
        }
    }

    // Back-substitute R beta = (Q^T y)[..k].
    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = qty[j];
        for l in (j + 1)..k {
            acc -= a[l][j] * beta[l];
        }
        beta[j] = acc / a[j][j];
    }

    let residuals: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| yi - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();

    let df_resid = m - k;
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / df_resid as f64;

    // (X'X)^{-1} = R^{-1} R^{-T}; only the diagonal is needed.
    let mut r_inv = vec![vec![0.0; k]; k];
    for j in (0..k).rev() {
        r_inv[j][j] = 1.0 / a[j][j];
        for i in (0..j).rev() {
            let mut acc = 0.0;
            for l in (i + 1)..=j {
                acc += a[l][i] * r_inv[l][j];
            }
            r_inv[i][j] = -acc / a[i][i];
        }
    }
    let standard_errors: Vec<f64> = (0..k)
        .map(|j| {
            let row_norm2: f64 = (j..k).map(|l| r_inv[j][l] * r_inv[j][l]).sum();
            (sigma2 * row_norm2).sqrt()
        })
        .collect();

    Ok(OlsFit {
        coefficients: beta,
        residuals,
        standard_errors,
        n_obs: m,
        df_resid,
    })
}

/// Outcome of the ADF unit-root test (constant, no trend).
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub lags_used: usize,
    pub crit_1pct: f64,
    pub crit_5pct: f64,
    pub crit_10pct: f64,
    pub is_stationary_5pct: bool,
}

/// Schwert's rule of thumb for the maximum lag order.
pub fn schwert_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test on the regression
/// `dy_t = alpha + gamma*y_{t-1} + sum_i beta_i*dy_{t-i} + e_t`.
///
/// The null hypothesis is a unit root; statistics below the critical value
/// indicate stationarity.
pub fn adf_test(series: &[f64], max_lag: Option<usize>) -> Result<AdfResult> {
    let n = series.len();
    if n < 20 {
        return Err(Error::TooShort(format!(
            "ADF needs at least 20 observations, got {n}"
        )));
    }
    let lags = max_lag.unwrap_or_else(|| schwert_lag(n));

    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // Regression rows exist for t in [lags+1, n); columns: const, y_{t-1}, lagged dy.
    let rows = n.saturating_sub(lags + 1);
    let cols = lags + 2;
    if rows <= cols {
        return Err(Error::TooShort(format!(
            "series of length {n} too short for {lags} ADF lags"
        )));
    }

    let mut x = Vec::with_capacity(rows);
    let mut resp = Vec::with_capacity(rows);
    for t in (lags + 1)..n {
        let mut row = Vec::with_capacity(cols);
        row.push(1.0);
        row.push(series[t - 1]);
        for i in 1..=lags {
            row.push(dy[t - 1 - i]);
        }
        x.push(row);
        resp.push(dy[t - 1]);
    }

    let fit = ols(&x, &resp)?;
    let statistic = fit.coefficients[1] / fit.standard_errors[1];
    Ok(AdfResult {
        statistic,
        lags_used: lags,
        crit_1pct: ADF_CRIT_1PCT,
        crit_5pct: ADF_CRIT_5PCT,
        crit_10pct: ADF_CRIT_10PCT,
        is_stationary_5pct: statistic < ADF_CRIT_5PCT,
    })
}

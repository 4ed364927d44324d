//! ARIMA(p,d,q) and SARIMAX-style estimation with an optional exogenous
//! regressor, multi-step forecasting, and information criteria.
//!
//! Estimation minimizes the conditional sum of squares of one-step
//! innovations (pre-sample innovations zero) with a Nelder-Mead simplex;
//! parameter vectors whose AR/MA polynomial roots violate the unit-circle
//! margin score `+inf`. Seasonal terms enter as multiplicative polynomial
//! factors at the seasonal lag. The exogenous path regresses the
//! differenced series on the differenced regressor first, then fits the
//! ARMA on what remains.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::TimeSeries;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::stattests::ols;

/// Margin by which AR/MA roots must lie outside the unit circle.
pub const ROOT_MARGIN: f64 = 1e-6;

/// Seasonal (P, D, Q) orders at period `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeasonalSpec {
    pub cap_p: usize,
    pub cap_d: usize,
    pub cap_q: usize,
    pub period: usize,
}

/// Model order plus the exogenous switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal: Option<SeasonalSpec>,
    pub use_exogenous: bool,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal: None,
            use_exogenous: false,
        }
    }

    pub fn with_seasonal(mut self, seasonal: SeasonalSpec) -> Self {
        self.seasonal = Some(seasonal);
        self
    }

    pub fn with_exogenous(mut self) -> Self {
        self.use_exogenous = true;
        self
    }

    fn seasonal_orders(&self) -> (usize, usize, usize, usize) {
        match self.seasonal {
            Some(s) => (s.cap_p, s.cap_d, s.cap_q, s.period),
            None => (0, 0, 0, 1),
        }
    }

    /// Number of ARMA coefficients (excluding intercept and sigma2).
    pub fn n_coefficients(&self) -> usize {
        let (cap_p, _, cap_q, _) = self.seasonal_orders();
        self.p + self.q + cap_p + cap_q
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.seasonal {
            if s.period < 2 {
                return Err(Error::Validation(format!(
                    "seasonal period must be >= 2, got {}",
                    s.period
                )));
            }
        }
        if self.n_coefficients() == 0 {
            return Err(Error::Validation(
                "pure-difference model has no estimable parameters".into(),
            ));
        }
        Ok(())
    }

    /// Differencing stages in application order: seasonal first, then
    /// regular. Each entry is the lag of one stage.
    fn stage_lags(&self) -> Vec<usize> {
        let (_, cap_d, _, period) = self.seasonal_orders();
        let mut lags = vec![period; cap_d];
        lags.extend(std::iter::repeat(1).take(self.d));
        lags
    }
}

impl std::fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)?;
        if let Some(s) = self.seasonal {
            write!(f, "({},{},{})[{}]", s.cap_p, s.cap_d, s.cap_q, s.period)?;
        }
        if self.use_exogenous {
            write!(f, "+exog")?;
        }
        Ok(())
    }
}

/// Estimation knobs for the simplex search.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
        }
    }
}

/// A fitted model. Holds everything needed to forecast: coefficients plus
/// the per-stage differenced history.
#[derive(Debug, Clone)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub beta_exog: Option<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    /// Innovations aligned to the working series; the first `css_start`
    /// entries are the zeroed pre-sample values.
    pub residuals: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Observations entering the likelihood.
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Series at each differencing stage; `levels[0]` is the original.
    pub levels: Vec<Vec<f64>>,
    /// Exogenous series at the same stages, when used.
    pub exog_levels: Option<Vec<Vec<f64>>>,
    /// Fully differenced series minus the exogenous contribution.
    pub working: Vec<f64>,
    pub css_start: usize,
}

/// Serializable fit summary (the checkpoint format).
#[derive(Debug, Clone, Serialize)]
pub struct ArimaSummary {
    pub spec: ArimaSpec,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub beta_exog: Option<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl ArimaFit {
    pub fn summary(&self) -> ArimaSummary {
        ArimaSummary {
            spec: self.spec,
            phi: self.phi.clone(),
            theta: self.theta.clone(),
            seasonal_phi: self.seasonal_phi.clone(),
            seasonal_theta: self.seasonal_theta.clone(),
            beta_exog: self.beta_exog,
            intercept: self.intercept,
            sigma2: self.sigma2,
            loglik: self.loglik,
            aic: self.aic,
            bic: self.bic,
            n_obs: self.n_obs,
            converged: self.converged,
            iterations: self.iterations,
        }
    }

    /// Expanded AR recursion coefficients `a_i` of
    /// `phi(B) * PHI(B^s) = 1 - sum a_i B^i`.
    pub fn expanded_ar(&self) -> Vec<f64> {
        let (_, _, _, period) = self.spec.seasonal_orders();
        expand_multiplicative(&self.phi, &self.seasonal_phi, period, Sign::Ar)
    }

    /// Expanded MA coefficients `m_j` of `theta(B) * THETA(B^s) = 1 + sum m_j B^j`.
    pub fn expanded_ma(&self) -> Vec<f64> {
        let (_, _, _, period) = self.spec.seasonal_orders();
        expand_multiplicative(&self.theta, &self.seasonal_theta, period, Sign::Ma)
    }
}

enum Sign {
    Ar,
    Ma,
}

/// Coefficient vector of a characteristic polynomial: AR factors are
/// `1 - sum c_i B^i`, MA factors `1 + sum c_i B^i`.
fn factor_poly(coefs: &[f64], lag: usize, sign: &Sign) -> Vec<f64> {
    let mut poly = vec![0.0; coefs.len() * lag + 1];
    poly[0] = 1.0;
    for (i, &c) in coefs.iter().enumerate() {
        poly[(i + 1) * lag] = match sign {
            Sign::Ar => -c,
            Sign::Ma => c,
        };
    }
    poly
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Multiply the non-seasonal and seasonal factors and return the lag
/// coefficients of the combined recursion (AR sense: `y_t = sum a_i y_{t-i}`).
fn expand_multiplicative(coefs: &[f64], seasonal: &[f64], period: usize, sign: Sign) -> Vec<f64> {
    let product = poly_mul(
        &factor_poly(coefs, 1, &sign),
        &factor_poly(seasonal, period, &sign),
    );
    product[1..]
        .iter()
        .map(|&c| match sign {
            Sign::Ar => -c,
            Sign::Ma => c,
        })
        .collect()
}

/// Schur-Cohn stability test: do all roots of `1 - sum c_i z^i` lie
/// strictly outside the circle of radius `1 + margin`?
pub fn roots_outside_unit_circle(coefs: &[f64], margin: f64) -> bool {
    if coefs.iter().all(|c| *c == 0.0) {
        return true;
    }
    // Roots of the scaled polynomial are the original roots divided by
    // (1 + margin), so plain unit-circle stability of the scaled
    // coefficients is stability-with-margin of the originals.
    let scale = 1.0 + margin;
    let mut a: Vec<f64> = coefs
        .iter()
        .enumerate()
        .map(|(i, &c)| c * scale.powi(i as i32 + 1))
        .collect();
    while let Some(&last) = a.last() {
        let k = last;
        if k.abs() >= 1.0 - 1e-12 {
            return false;
        }
        let m = a.len();
        if m == 1 {
            return true;
        }
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] + k * a[m - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// Pull coefficients toward zero until the margin test passes. Scaling
/// `c_i` by `rho^i` moves every root outward by `1/rho`.
fn shrink_to_feasible(mut coefs: Vec<f64>) -> Vec<f64> {
    let mut guard = 0;
    while !roots_outside_unit_circle(&coefs, ROOT_MARGIN * 2.0) && guard < 200 {
        for (i, c) in coefs.iter_mut().enumerate() {
            *c *= 0.95f64.powi(i as i32 + 1);
        }
        guard += 1;
    }
    coefs
}

/// Yule-Walker AR estimates via Levinson-Durbin.
fn yule_walker(values: &[f64], p: usize) -> Vec<f64> {
    if p == 0 {
        return vec![];
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let gamma: Vec<f64> = (0..=p)
        .map(|k| {
            (k..n)
                .map(|t| (values[t] - mean) * (values[t - k] - mean))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    if gamma[0] <= 1e-300 {
        return vec![0.0; p];
    }
    let mut phi: Vec<f64> = Vec::new();
    let mut var = gamma[0];
    for k in 1..=p {
        let acc: f64 = gamma[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, &pj)| pj * gamma[k - 1 - j])
                .sum::<f64>();
        let refl = if var.abs() > 1e-300 { acc / var } else { 0.0 };
        let mut next = vec![0.0; k];
        next[k - 1] = refl;
        for j in 0..k - 1 {
            next[j] = phi[j] - refl * phi[k - 2 - j];
        }
        phi = next;
        var *= 1.0 - refl * refl;
    }
    phi
}

struct CssOutcome {
    residuals: Vec<f64>,
    css: f64,
    start: usize,
}

/// One-step innovations with zeroed pre-sample values; conditions on the
/// first `len(ar)` observations.
fn css_recursion(working: &[f64], ar: &[f64], ma: &[f64], intercept: f64) -> CssOutcome {
    let n = working.len();
    let start = ar.len();
    let mut residuals = vec![0.0; n];
    let mut css = 0.0;
    for t in start..n {
        let mut pred = intercept;
        for (i, &a) in ar.iter().enumerate() {
            pred += a * working[t - 1 - i];
        }
        for (j, &m) in ma.iter().enumerate() {
            if t >= start + j + 1 {
                pred += m * residuals[t - 1 - j];
            }
        }
        let e = working[t] - pred;
        residuals[t] = e;
        css += e * e;
    }
    CssOutcome {
        residuals,
        css,
        start,
    }
}

struct ParamLayout {
    p: usize,
    q: usize,
    cap_p: usize,
    cap_q: usize,
}

impl ParamLayout {
    fn unpack<'a>(&self, x: &'a [f64]) -> (f64, &'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let c = x[0];
        let mut at = 1;
        let phi = &x[at..at + self.p];
        at += self.p;
        let theta = &x[at..at + self.q];
        at += self.q;
        let sphi = &x[at..at + self.cap_p];
        at += self.cap_p;
        let stheta = &x[at..at + self.cap_q];
        (c, phi, theta, sphi, stheta)
    }
}

fn apply_stages(values: &[f64], lags: &[usize]) -> Result<Vec<Vec<f64>>> {
    let mut levels = vec![values.to_vec()];
    for &lag in lags {
        let prev = levels.last().unwrap();
        if prev.len() <= lag {
            return Err(Error::TooShort(format!(
                "cannot apply lag-{lag} difference to length {}",
                prev.len()
            )));
        }
        let next: Vec<f64> = (lag..prev.len()).map(|t| prev[t] - prev[t - lag]).collect();
        levels.push(next);
    }
    Ok(levels)
}

/// Fit on a monthly series with an optional aligned exogenous series.
pub fn fit(series: &TimeSeries, spec: &ArimaSpec, exog: Option<&TimeSeries>) -> Result<ArimaFit> {
    fit_with(series, spec, exog, &FitOptions::default())
}

pub fn fit_with(
    series: &TimeSeries,
    spec: &ArimaSpec,
    exog: Option<&TimeSeries>,
    options: &FitOptions,
) -> Result<ArimaFit> {
    if let Some(x) = exog {
        if x.len() != series.len() {
            return Err(Error::ShapeMismatch(format!(
                "exogenous length {} vs series length {}",
                x.len(),
                series.len()
            )));
        }
    }
    fit_values(
        series.values(),
        spec,
        exog.map(|x| x.values()),
        options,
    )
}

/// Slice-level entry point used by the harness and tests.
pub fn fit_values(
    values: &[f64],
    spec: &ArimaSpec,
    exog: Option<&[f64]>,
    options: &FitOptions,
) -> Result<ArimaFit> {
    spec.validate()?;
    if spec.use_exogenous != exog.is_some() {
        return Err(Error::Validation(
            "exogenous series presence must match spec.use_exogenous".into(),
        ));
    }
    let min_len = 10 * (spec.p + spec.q + 1) + spec.d;
    if values.len() < min_len {
        return Err(Error::TooShort(format!(
            "need at least {min_len} observations for {spec}, got {}",
            values.len()
        )));
    }

    let lags = spec.stage_lags();
    let levels = apply_stages(values, &lags)?;
    let differenced = levels.last().unwrap().clone();

    let (exog_levels, beta_exog, working) = match exog {
        Some(x) => {
            if x.len() != values.len() {
                return Err(Error::ShapeMismatch(
                    "exogenous series must be as long as the series".into(),
                ));
            }
            let xl = apply_stages(x, &lags)?;
            let xd = xl.last().unwrap();
            let beta = exog_beta(&differenced, xd)?;
            let adjusted: Vec<f64> = differenced
                .iter()
                .zip(xd)
                .map(|(w, x)| w - beta * x)
                .collect();
            (Some(xl), Some(beta), adjusted)
        }
        None => (None, None, differenced),
    };

    let (cap_p, _, cap_q, period) = spec.seasonal_orders();
    let layout = ParamLayout {
        p: spec.p,
        q: spec.q,
        cap_p,
        cap_q,
    };

    let expanded_ar_len = spec.p + cap_p * period;
    let n_coef = spec.n_coefficients();
    if working.len() < expanded_ar_len + n_coef + 3 {
        return Err(Error::TooShort(format!(
            "only {} differenced observations for {spec}",
            working.len()
        )));
    }

    // Initialization: Yule-Walker AR, zero MA/seasonal, mean intercept.
    let mean = working.iter().sum::<f64>() / working.len() as f64;
    let phi0 = shrink_to_feasible(yule_walker(&working, spec.p));
    let mut x0 = vec![mean];
    x0.extend_from_slice(&phi0);
    x0.extend(std::iter::repeat(0.0).take(spec.q + cap_p + cap_q));

    let sd = (working.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>()
        / working.len() as f64)
        .sqrt();
    let mut steps = vec![0.1 * sd + 1e-6];
    steps.extend(std::iter::repeat(0.1).take(n_coef));

    let objective = |x: &[f64]| -> f64 {
        let (c, phi, theta, sphi, stheta) = layout.unpack(x);
        if !(roots_outside_unit_circle(phi, ROOT_MARGIN)
            && roots_outside_unit_circle(sphi, ROOT_MARGIN)
            && invertible(theta)
            && invertible(stheta))
        {
            return f64::INFINITY;
        }
        let ar = expand_multiplicative(phi, sphi, period, Sign::Ar);
        let ma = expand_multiplicative(theta, stheta, period, Sign::Ma);
        css_recursion(&working, &ar, &ma, c).css
    };

    let nm = nelder_mead(
        objective,
        &x0,
        &steps,
        &NelderMeadOptions {
            max_iter: options.max_iter,
            tol: options.tol,
        },
    );

    let (c, phi, theta, sphi, stheta) = layout.unpack(&nm.x);
    let fit = build_fit(
        spec,
        phi.to_vec(),
        theta.to_vec(),
        sphi.to_vec(),
        stheta.to_vec(),
        beta_exog,
        c,
        levels,
        exog_levels,
        working,
        nm.converged,
        nm.iterations,
    )?;
    if !nm.converged {
        return Err(Error::NonConvergence {
            iterations: nm.iterations,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

/// MA invertibility: roots of `1 + sum theta_j z^j` outside the margin.
fn invertible(theta: &[f64]) -> bool {
    let negated: Vec<f64> = theta.iter().map(|t| -t).collect();
    roots_outside_unit_circle(&negated, ROOT_MARGIN)
}

/// Exogenous slope from a regression with intercept (the intercept is
/// discarded; the ARMA constant absorbs the level). A regressor with no
/// variance contributes nothing and gets beta = 0, which keeps an all-zero
/// CO2 series bit-identical to the exogenous-free path.
fn exog_beta(differenced: &[f64], exog_diff: &[f64]) -> Result<f64> {
    let n = exog_diff.len() as f64;
    let mean = exog_diff.iter().sum::<f64>() / n;
    let var = exog_diff.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var <= 1e-12 {
        return Ok(0.0);
    }
    let x: Vec<Vec<f64>> = exog_diff.iter().map(|&v| vec![1.0, v]).collect();
    let fit = ols(&x, differenced)?;
    Ok(fit.coefficients[1])
}

#[allow(clippy::too_many_arguments)]
fn build_fit(
    spec: &ArimaSpec,
    phi: Vec<f64>,
    theta: Vec<f64>,
    seasonal_phi: Vec<f64>,
    seasonal_theta: Vec<f64>,
    beta_exog: Option<f64>,
    intercept: f64,
    levels: Vec<Vec<f64>>,
    exog_levels: Option<Vec<Vec<f64>>>,
    working: Vec<f64>,
    converged: bool,
    iterations: usize,
) -> Result<ArimaFit> {
    let (_, _, _, period) = spec.seasonal_orders();
    if !(roots_outside_unit_circle(&phi, ROOT_MARGIN)
        && roots_outside_unit_circle(&seasonal_phi, ROOT_MARGIN)
        && invertible(&theta)
        && invertible(&seasonal_theta))
    {
        return Err(Error::Validation(
            "fitted parameters violate the unit-circle margin".into(),
        ));
    }
    let ar = expand_multiplicative(&phi, &seasonal_phi, period, Sign::Ar);
    let ma = expand_multiplicative(&theta, &seasonal_theta, period, Sign::Ma);
    let css = css_recursion(&working, &ar, &ma, intercept);
    let n_eff = working.len() - css.start;
    let sigma2 = (css.css / n_eff as f64).max(f64::MIN_POSITIVE);
    let loglik = -0.5 * n_eff as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);
    let k = (spec.n_coefficients() + 1 + 1 + usize::from(beta_exog.is_some())) as f64;
    let aic = -2.0 * loglik + 2.0 * k;
    let bic = -2.0 * loglik + k * (n_eff as f64).ln();

    Ok(ArimaFit {
        spec: *spec,
        phi,
        theta,
        seasonal_phi,
        seasonal_theta,
        beta_exog,
        intercept,
        sigma2,
        residuals: css.residuals,
        loglik,
        aic,
        bic,
        n_obs: n_eff,
        converged,
        iterations,
        levels,
        exog_levels,
        working,
        css_start: css.start,
    })
}

/// Point forecasts with residual-variance 95% intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Iterate the ARMA recursion with future innovations set to zero,
/// re-integrate the differences, and add the exogenous contribution on
/// the differenced scale.
pub fn forecast(fit: &ArimaFit, horizon: usize, future_exog: Option<&[f64]>) -> Result<Forecast> {
    if horizon < 1 {
        return Err(Error::Validation("horizon must be >= 1".into()));
    }
    match (fit.beta_exog, future_exog) {
        (Some(_), Some(x)) if x.len() != horizon => {
            return Err(Error::ShapeMismatch(format!(
                "future exogenous length {} vs horizon {horizon}",
                x.len()
            )));
        }
        (Some(_), None) => {
            return Err(Error::Validation(
                "fit used an exogenous series; future values required".into(),
            ));
        }
        (None, Some(_)) => {
            return Err(Error::Validation(
                "fit has no exogenous series; future values not accepted".into(),
            ));
        }
        _ => {}
    }

    let ar = fit.expanded_ar();
    let ma = fit.expanded_ma();
    let lags = fit.spec.stage_lags();

    // ARMA rollout on the adjusted differenced scale.
    let n = fit.working.len();
    let mut w_ext = fit.working.clone();
    let mut e_ext = fit.residuals.clone();
    for _ in 0..horizon {
        let t = w_ext.len();
        let mut pred = fit.intercept;
        for (i, &a) in ar.iter().enumerate() {
            pred += a * w_ext[t - 1 - i];
        }
        for (j, &m) in ma.iter().enumerate() {
            let idx = t - 1 - j;
            if idx >= fit.css_start {
                pred += m * e_ext[idx];
            }
        }
        w_ext.push(pred);
        e_ext.push(0.0);
    }
    let mut future_diff: Vec<f64> = w_ext[n..].to_vec();

    // Exogenous contribution on the differenced scale.
    if let (Some(beta), Some(x_future)) = (fit.beta_exog, future_exog) {
        let exog_levels = fit
            .exog_levels
            .as_ref()
            .expect("exogenous fit stores exog levels");
        let xd_future = difference_future(exog_levels, &lags, x_future);
        for (w, x) in future_diff.iter_mut().zip(&xd_future) {
            *w += beta * x;
        }
    }

    let point = integrate_future(&fit.levels, &lags, &future_diff);

    // MA(infinity) weights of the full (integrated) model.
    let psi = psi_weights(fit, horizon);
    let mut cum = 0.0;
    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    for (h, &p) in point.iter().enumerate() {
        cum += psi[h] * psi[h];
        let half = 1.96 * (fit.sigma2 * cum).sqrt();
        lower.push(p - half);
        upper.push(p + half);
    }

    Ok(Forecast {
        point,
        lower,
        upper,
    })
}

/// psi weights of the ARIMA model (differencing factors folded into the
/// AR polynomial), truncated at `horizon`.
fn psi_weights(fit: &ArimaFit, horizon: usize) -> Vec<f64> {
    let (_, cap_d, _, period) = fit.spec.seasonal_orders();
    let ar = fit.expanded_ar();
    let ma = fit.expanded_ma();

    // (1 - sum a_i B^i) * (1 - B)^d * (1 - B^s)^D
    let mut poly = factor_poly(&ar, 1, &Sign::Ar);
    for _ in 0..fit.spec.d {
        poly = poly_mul(&poly, &[1.0, -1.0]);
    }
    let mut seasonal_unit = vec![0.0; period + 1];
    seasonal_unit[0] = 1.0;
    seasonal_unit[period] = -1.0;
    for _ in 0..cap_d {
        poly = poly_mul(&poly, &seasonal_unit);
    }
    let big_a: Vec<f64> = poly[1..].iter().map(|c| -c).collect();

    let mut psi = vec![0.0; horizon.max(1)];
    psi[0] = 1.0;
    for j in 1..psi.len() {
        let mut acc = if j <= ma.len() { ma[j - 1] } else { 0.0 };
        for (i, &a) in big_a.iter().enumerate() {
            if j > i {
                acc += a * psi[j - 1 - i];
            }
        }
        psi[j] = acc;
    }
    psi
}

fn difference_future(levels: &[Vec<f64>], lags: &[usize], future: &[f64]) -> Vec<f64> {
    let mut fut = future.to_vec();
    for (k, &lag) in lags.iter().enumerate() {
        let hist = &levels[k];
        let next: Vec<f64> = fut
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let prev = if j >= lag {
                    fut[j - lag]
                } else {
                    hist[hist.len() + j - lag]
                };
                v - prev
            })
            .collect();
        fut = next;
    }
    fut
}

fn integrate_future(levels: &[Vec<f64>], lags: &[usize], diffed: &[f64]) -> Vec<f64> {
    let mut fut = diffed.to_vec();
    for (k, &lag) in lags.iter().enumerate().rev() {
        let hist = &levels[k];
        let mut next: Vec<f64> = Vec::with_capacity(fut.len());
        for (j, &w) in fut.iter().enumerate() {
            let prev = if j >= lag {
                next[j - lag]
            } else {
                hist[hist.len() + j - lag]
            };
            next.push(w + prev);
        }
        fut = next;
    }
    fut
}

/// Re-anchor a fitted model on new data (typically the full series after
/// fitting on the training prefix): the coefficients are kept, the
/// differencing stages and innovations are recomputed, so subsequent
/// forecasts continue from the end of `values`. Likelihood figures stay
/// those of the original fit.
pub fn with_data(fit: &ArimaFit, values: &[f64], exog: Option<&[f64]>) -> Result<ArimaFit> {
    if fit.beta_exog.is_some() != exog.is_some() {
        return Err(Error::Validation(
            "exogenous series presence must match the fit".into(),
        ));
    }
    let lags = fit.spec.stage_lags();
    let levels = apply_stages(values, &lags)?;
    let deepest = levels.last().unwrap().clone();
    let (exog_levels, working) = match (exog, fit.beta_exog) {
        (Some(x), Some(beta)) => {
            if x.len() != values.len() {
                return Err(Error::ShapeMismatch(
                    "exogenous series must be as long as the series".into(),
                ));
            }
            let xl = apply_stages(x, &lags)?;
            let xd = xl.last().unwrap();
            let adjusted: Vec<f64> = deepest.iter().zip(xd).map(|(w, x)| w - beta * x).collect();
            (Some(xl), adjusted)
        }
        _ => (None, deepest),
    };
    let ar = fit.expanded_ar();
    let ma = fit.expanded_ma();
    if working.len() <= ar.len() {
        return Err(Error::TooShort(format!(
            "only {} differenced observations for the fitted recursion",
            working.len()
        )));
    }
    let css = css_recursion(&working, &ar, &ma, fit.intercept);
    Ok(ArimaFit {
        residuals: css.residuals,
        css_start: css.start,
        levels,
        exog_levels,
        working,
        ..fit.clone()
    })
}

/// One-step-ahead predictions over `values` using the fitted parameters
/// (no re-estimation), on the original scale. Entries before the first
/// predictable index are NaN.
pub fn one_step_predictions(
    fit: &ArimaFit,
    values: &[f64],
    exog: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if fit.beta_exog.is_some() != exog.is_some() {
        return Err(Error::Validation(
            "exogenous series presence must match the fit".into(),
        ));
    }
    let lags = fit.spec.stage_lags();
    let levels = apply_stages(values, &lags)?;
    let deepest = levels.last().unwrap();

    let (xd, beta) = match (exog, fit.beta_exog) {
        (Some(x), Some(beta)) => {
            if x.len() != values.len() {
                return Err(Error::ShapeMismatch(
                    "exogenous series must be as long as the series".into(),
                ));
            }
            let xl = apply_stages(x, &lags)?;
            (Some(xl.last().unwrap().clone()), beta)
        }
        _ => (None, 0.0),
    };
    let working: Vec<f64> = match &xd {
        Some(xd) => deepest.iter().zip(xd).map(|(w, x)| w - beta * x).collect(),
        None => deepest.clone(),
    };

    let ar = fit.expanded_ar();
    let ma = fit.expanded_ma();
    let css = css_recursion(&working, &ar, &ma, fit.intercept);

    // Ascend the differencing stages: each stage adds back the actual
    // previous value of the shallower level.
    let mut offsets = vec![0usize];
    for &lag in &lags {
        offsets.push(offsets.last().unwrap() + lag);
    }
    let total_offset = *offsets.last().unwrap();

    let mut out = vec![f64::NAN; values.len()];
    for t in (total_offset + css.start)..values.len() {
        let tw = t - total_offset;
        let mut pred = working[tw] - css.residuals[tw];
        if let Some(xd) = &xd {
            pred += beta * xd[tw];
        }
        for (k, &lag) in lags.iter().enumerate() {
            pred += levels[k][t - offsets[k] - lag];
        }
        out[t] = pred;
    }
    Ok(out)
}

/// Outcome of fitting several candidate specifications.
#[derive(Debug)]
pub struct GridSearchOutcome {
    /// Successful fits, ascending by AIC (BIC breaks ties).
    pub ranked: Vec<ArimaFit>,
    pub failures: Vec<(ArimaSpec, String)>,
}

pub fn grid_search(
    series: &TimeSeries,
    specs: &[ArimaSpec],
    exog: Option<&TimeSeries>,
) -> Result<GridSearchOutcome> {
    if specs.is_empty() {
        return Err(Error::Validation("no candidate specifications".into()));
    }
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for spec in specs {
        let exog_for_spec = if spec.use_exogenous { exog } else { None };
        match fit(series, spec, exog_for_spec) {
            Ok(f) => ranked.push(f),
            Err(e) => failures.push((*spec, e.to_string())),
        }
    }
    if ranked.is_empty() {
        return Err(Error::AllCandidatesFailed {
            reasons: failures
                .iter()
                .map(|(s, e)| format!("{s}: {e}"))
                .collect(),
        });
    }
    ranked.sort_by(|a, b| a.aic.total_cmp(&b.aic).then(a.bic.total_cmp(&b.bic)));
    Ok(GridSearchOutcome { ranked, failures })
}

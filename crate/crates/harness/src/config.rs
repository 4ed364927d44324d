//! Experiment configuration: a single JSON document driving the runner.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tempcast_core::arima::{ArimaSpec, SeasonalSpec};
use tempcast_core::ingest::Co2Columns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Arima,
    Lstm,
    Sarimax,
    Snn,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Arima => "arima",
            ModelKind::Lstm => "lstm",
            ModelKind::Sarimax => "sarimax",
            ModelKind::Snn => "snn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Chronological,
    Shuffled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Co2ColumnsConfig {
    #[serde(default = "default_country_col")]
    pub country: String,
    #[serde(default = "default_year_col")]
    pub year: String,
    #[serde(default = "default_emissions_col")]
    pub emissions: String,
}

fn default_country_col() -> String {
    "country".into()
}
fn default_year_col() -> String {
    "year".into()
}
fn default_emissions_col() -> String {
    "co2".into()
}

impl Default for Co2ColumnsConfig {
    fn default() -> Self {
        Self {
            country: default_country_col(),
            year: default_year_col(),
            emissions: default_emissions_col(),
        }
    }
}

impl Co2ColumnsConfig {
    pub fn to_core(&self) -> Co2Columns {
        Co2Columns {
            country: self.country.clone(),
            year: self.year.clone(),
            emissions: self.emissions.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataConfig {
    pub temperature_csv: PathBuf,
    #[serde(default)]
    pub co2_csv: Option<PathBuf>,
    #[serde(default)]
    pub co2_columns: Co2ColumnsConfig,
}

/// Explicit city list or `"random:k"` drawn with the run seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CitySelection {
    List(Vec<String>),
    Random(String),
}

impl CitySelection {
    pub fn random_count(&self) -> Result<Option<usize>> {
        match self {
            CitySelection::List(_) => Ok(None),
            CitySelection::Random(spec) => {
                let rest = spec
                    .strip_prefix("random:")
                    .with_context(|| format!("city selector `{spec}` is not `random:<k>`"))?;
                let k: usize = rest
                    .parse()
                    .with_context(|| format!("bad count in city selector `{spec}`"))?;
                if k == 0 {
                    bail!("random city count must be >= 1");
                }
                Ok(Some(k))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ArimaModelConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal: Option<SeasonalConfig>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ArimaModelConfig {
    fn default() -> Self {
        Self {
            p: 5,
            d: 1,
            q: 3,
            seasonal: None,
            max_iter: 40_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeasonalConfig {
    pub cap_p: usize,
    pub cap_d: usize,
    pub cap_q: usize,
    pub period: usize,
}

impl From<SeasonalConfig> for SeasonalSpec {
    fn from(c: SeasonalConfig) -> Self {
        SeasonalSpec {
            cap_p: c.cap_p,
            cap_d: c.cap_d,
            cap_q: c.cap_q,
            period: c.period,
        }
    }
}

impl ArimaModelConfig {
    pub fn spec(&self, exogenous: bool) -> ArimaSpec {
        let mut spec = ArimaSpec::new(self.p, self.d, self.q);
        if let Some(seasonal) = self.seasonal {
            spec = spec.with_seasonal(seasonal.into());
        }
        if exogenous {
            spec = spec.with_exogenous();
        }
        spec
    }
}

/// SARIMAX defaults: same non-seasonal order as ARIMA plus a (1,0,1)[12]
/// seasonal factor and the CO2 exogenous regressor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SarimaxModelConfig {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal: Option<SeasonalConfig>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SarimaxModelConfig {
    fn default() -> Self {
        Self {
            p: 5,
            d: 1,
            q: 3,
            seasonal: Some(SeasonalConfig {
                cap_p: 1,
                cap_d: 0,
                cap_q: 1,
                period: 12,
            }),
            max_iter: 40_000,
            tol: 1e-8,
        }
    }
}

impl SarimaxModelConfig {
    pub fn spec(&self) -> ArimaSpec {
        let mut spec = ArimaSpec::new(self.p, self.d, self.q).with_exogenous();
        if let Some(seasonal) = self.seasonal {
            spec = spec.with_seasonal(seasonal.into());
        }
        spec
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmModelConfig {
    pub window_len: usize,
    pub hidden_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
}

impl Default for LstmModelConfig {
    fn default() -> Self {
        Self {
            window_len: 12,
            hidden_size: 64,
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SnnModelConfig {
    pub time_window: usize,
    pub time_steps: usize,
    pub hidden_size: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub threshold: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl Default for SnnModelConfig {
    fn default() -> Self {
        Self {
            time_window: 30,
            time_steps: 16,
            hidden_size: 64,
            epochs: 100,
            batch_size: 32,
            learning_rate: 0.01,
            validation_fraction: 0.1,
            threshold: 0.5,
            beta: 0.9,
            alpha: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricsSpace {
    Celsius,
    Scaled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub cities: CitySelection,
    pub models: Vec<ModelKind>,
    #[serde(default = "default_split_mode")]
    pub split_mode: SplitMode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_months: usize,
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_metrics_space")]
    pub metrics_space: MetricsSpace,
    #[serde(default)]
    pub comparison_city: Option<String>,
    #[serde(default)]
    pub arima: ArimaModelConfig,
    #[serde(default)]
    pub sarimax: SarimaxModelConfig,
    #[serde(default)]
    pub lstm: LstmModelConfig,
    #[serde(default)]
    pub snn: SnnModelConfig,
}

fn default_split_mode() -> SplitMode {
    SplitMode::Shuffled
}
fn default_seed() -> u64 {
    42
}
fn default_horizon() -> usize {
    120
}
fn default_jobs() -> usize {
    1
}
fn default_metrics_space() -> MetricsSpace {
    MetricsSpace::Celsius
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).context("could not parse experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            bail!("at least one model is required");
        }
        let unique: BTreeSet<_> = self.models.iter().collect();
        if unique.len() != self.models.len() {
            bail!("duplicate models in config");
        }
        if let CitySelection::List(cities) = &self.cities {
            if cities.is_empty() {
                bail!("at least one city is required");
            }
        }
        self.cities.random_count()?;
        if self.horizon_months < 1 {
            bail!("horizon_months must be >= 1");
        }
        if self.jobs < 1 {
            bail!("jobs must be >= 1");
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized config (whitespace-insensitive).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }

    /// Models in output order (sorted by name).
    pub fn sorted_models(&self) -> Vec<ModelKind> {
        let mut models = self.models.clone();
        models.sort();
        models
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

//! Per-city temperature forecasting from first principles.
//!
//! The crate implements three forecasting model families over monthly
//! temperature series — ARIMA/SARIMAX with an optional CO2 exogenous
//! regressor, a single-layer LSTM trained with backpropagation through
//! time, and a spiking network of leaky integrate-and-fire units trained
//! with arctan surrogate gradients — along with the data pipeline
//! (ingestion, repair, resampling, scaling, windowing, spike encoding),
//! the stationarity test used before ARIMA fitting, and the evaluation
//! metrics shared by every model.

pub mod arima;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod lstm;
pub mod metrics;
pub mod optim;
pub mod series;
pub mod snn;
pub mod stattests;

pub use error::{Error, Result};

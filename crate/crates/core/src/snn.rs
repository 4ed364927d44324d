//! Spiking forecaster: latency-encoded windows feed a feedforward hidden
//! layer whose output current drives a single leaky integrate-and-fire
//! node; the spike count over the time steps yields a binary prediction.
//!
//! Training backpropagates through the LIF loop with an arctan surrogate
//! standing in for the spike derivative. A smoothed forward mode (the
//! surrogate itself in place of the hard threshold) exists so the
//! backward pass can be validated against finite differences.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lstm::{EpochLoss, TrainConfig};
use crate::optim::AdamState;
use crate::series::SpikeTrainBatch;

/// Leaky integrate-and-fire parameters. Reset is hard: the membrane drops
/// to zero on a spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifConfig {
    pub threshold: f64,
    /// Membrane decay per step, in (0, 1).
    pub beta: f64,
    /// Surrogate width.
    pub alpha: f64,
}

impl Default for LifConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            beta: 0.9,
            alpha: 2.0,
        }
    }
}

impl LifConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Validation("beta must be in (0, 1)".into()));
        }
        if self.threshold <= 0.0 {
            return Err(Error::Validation("threshold must be > 0".into()));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Validation("alpha must be > 0".into()));
        }
        Ok(())
    }
}

/// One membrane update: decay, integrate, threshold, hard reset.
#[inline]
pub fn lif_step(v: f64, input_current: f64, cfg: &LifConfig) -> (f64, u8) {
    let v_pre = cfg.beta * v + input_current;
    if v_pre >= cfg.threshold {
        (0.0, 1)
    } else {
        (v_pre, 0)
    }
}

/// Smoothed spike `s~ = (1/pi) * atan(pi*alpha*(v - th)/2) + 1/2`.
#[inline]
pub fn smoothed_spike(v_pre: f64, cfg: &LifConfig) -> f64 {
    (PI * cfg.alpha * (v_pre - cfg.threshold) / 2.0).atan() / PI + 0.5
}

/// Derivative of [`smoothed_spike`]; peaks at `alpha/2` on the threshold.
#[inline]
pub fn surrogate_grad(v_pre: f64, cfg: &LifConfig) -> f64 {
    let u = PI * cfg.alpha * (v_pre - cfg.threshold) / 2.0;
    cfg.alpha / (2.0 * (1.0 + u * u))
}

/// Network parameters: hidden layer over the window positions, scalar
/// output current into the LIF node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnnParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub lif: LifConfig,
}

impl SnnParams {
    pub fn init(hidden: usize, time_window: usize, lif: LifConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden as f64).sqrt();
        let w1 = Matrix::from_fn(hidden, time_window, |_, _| rng.gen_range(-k..k));
        let b1 = (0..hidden).map(|_| rng.gen_range(-k..k)).collect();
        let w2 = (0..hidden).map(|_| rng.gen_range(-k..k)).collect();
        let b2 = rng.gen_range(-k..k);
        Self {
            w1,
            b1,
            w2,
            b2,
            lif,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows
    }

    pub fn time_window(&self) -> usize {
        self.w1.cols
    }

    fn block_sizes(&self) -> Vec<usize> {
        vec![
            self.w1.rows * self.w1.cols,
            self.b1.len(),
            self.w2.len(),
            1,
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.data_mut(),
            &mut self.b1,
            &mut self.w2,
            std::slice::from_mut(&mut self.b2),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SnnGrads {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl SnnGrads {
    pub fn zeros(params: &SnnParams) -> Self {
        Self {
            w1: Matrix::zeros(params.w1.rows, params.w1.cols),
            b1: vec![0.0; params.b1.len()],
            w2: vec![0.0; params.w2.len()],
            b2: 0.0,
        }
    }

    fn blocks(&self) -> Vec<&[f64]> {
        vec![
            self.w1.data(),
            &self.b1,
            &self.w2,
            std::slice::from_ref(&self.b2),
        ]
    }
}

/// Binary forecast for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeForecast {
    pub binary_prediction: u8,
    pub spike_count: usize,
    pub surrogate_rate: f64,
}

/// Whether the spike nonlinearity is the hard threshold or its smooth
/// stand-in (used to validate gradients).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Hard,
    Smoothed,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct SnnCache {
    z1: Vec<Vec<f64>>,
    a1: Vec<Vec<f64>>,
    v_pre: Vec<f64>,
    s: Vec<f64>,
    pub rate: f64,
}

fn sample_column(batch: &SpikeTrainBatch, sample: usize, step: usize) -> Vec<f64> {
    (0..batch.time_window)
        .map(|w| f64::from(batch.spike(sample, w, step)))
        .collect()
}

fn forward_inner(
    params: &SnnParams,
    batch: &SpikeTrainBatch,
    sample: usize,
    mode: ForwardMode,
) -> Result<SnnCache> {
    if batch.time_window != params.time_window() {
        return Err(Error::ShapeMismatch(format!(
            "batch window {} vs network window {}",
            batch.time_window,
            params.time_window()
        )));
    }
    let steps = batch.time_steps;
    let hidden = params.hidden();
    let mut cache = SnnCache {
        z1: Vec::with_capacity(steps),
        a1: Vec::with_capacity(steps),
        v_pre: Vec::with_capacity(steps),
        s: Vec::with_capacity(steps),
        rate: 0.0,
    };

    let mut v = 0.0;
    let mut z1 = vec![0.0; hidden];
    let mut spike_sum = 0.0;
    for t in 0..steps {
        let x = sample_column(batch, sample, t);
        params.w1.matvec(&x, &mut z1);
        for (z, b) in z1.iter_mut().zip(&params.b1) {
            *z += b;
        }
        let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
        let current: f64 = params.w2.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>() + params.b2;

        let v_pre = params.lif.beta * v + current;
        if !v_pre.is_finite() {
            return Err(Error::Numeric {
                step: t,
                context: "membrane potential".into(),
            });
        }
        let s = match mode {
            ForwardMode::Hard => f64::from(v_pre >= params.lif.threshold),
            ForwardMode::Smoothed => smoothed_spike(v_pre, &params.lif),
        };
        v = v_pre * (1.0 - s);
        spike_sum += s;

        cache.z1.push(z1.clone());
        cache.a1.push(a1);
        cache.v_pre.push(v_pre);
        cache.s.push(s);
    }
    cache.rate = spike_sum / steps as f64;
    Ok(cache)
}

/// Run one sample through the network with the hard threshold.
pub fn forward_snn(
    params: &SnnParams,
    batch: &SpikeTrainBatch,
    sample: usize,
) -> Result<(SpikeForecast, SnnCache)> {
    let cache = forward_inner(params, batch, sample, ForwardMode::Hard)?;
    let spike_count = cache.s.iter().filter(|&&s| s == 1.0).count();
    Ok((
        SpikeForecast {
            binary_prediction: u8::from(spike_count >= 1),
            spike_count,
            surrogate_rate: cache.rate,
        },
        cache,
    ))
}

/// Backpropagate `d(loss)/d(rate)`, with [`surrogate_grad`] standing in
/// for the spike derivative; gradients flow through both the rate sum and
/// the multiplicative reset.
pub fn backward(
    params: &SnnParams,
    batch: &SpikeTrainBatch,
    sample: usize,
    cache: &SnnCache,
    dl_drate: f64,
    grads: &mut SnnGrads,
) {
    let steps = batch.time_steps;
    let hidden = params.hidden();
    let ds_direct = dl_drate / steps as f64;

    let mut dv = 0.0;
    let mut dz1 = vec![0.0; hidden];
    for t in (0..steps).rev() {
        let v_pre = cache.v_pre[t];
        let s = cache.s[t];
        // v_t = v_pre * (1 - s); rate gets s/steps.
        let ds_total = ds_direct - dv * v_pre;
        let dv_pre = dv * (1.0 - s) + ds_total * surrogate_grad(v_pre, &params.lif);

        let d_current = dv_pre;
        grads.b2 += d_current;
        let a1 = &cache.a1[t];
        for j in 0..hidden {
            grads.w2[j] += d_current * a1[j];
            let da1 = d_current * params.w2[j];
            dz1[j] = if cache.z1[t][j] > 0.0 { da1 } else { 0.0 };
            grads.b1[j] += dz1[j];
        }
        let x = sample_column(batch, sample, t);
        grads.w1.add_outer(&dz1, &x);

        dv = params.lif.beta * dv_pre;
    }
}

/// Rate-MSE loss and gradients over the given samples.
pub fn loss_and_grads(
    params: &SnnParams,
    batch: &SpikeTrainBatch,
    indices: &[usize],
    mode: ForwardMode,
) -> Result<(f64, SnnGrads)> {
    if indices.is_empty() {
        return Err(Error::Validation("empty sample set".into()));
    }
    let mut grads = SnnGrads::zeros(params);
    let scale = 1.0 / indices.len() as f64;
    let mut loss = 0.0;
    for &i in indices {
        let cache = forward_inner(params, batch, i, mode)?;
        let target = f64::from(batch.binary_targets[i]);
        let err = cache.rate - target;
        loss += err * err * scale;
        backward(params, batch, i, &cache, 2.0 * err * scale, &mut grads);
    }
    Ok((loss, grads))
}

fn rate_mse(
    params: &SnnParams,
    batch: &SpikeTrainBatch,
    range: std::ops::Range<usize>,
) -> Result<f64> {
    let mut acc = 0.0;
    let n = range.len();
    for i in range {
        let cache = forward_inner(params, batch, i, ForwardMode::Hard)?;
        let err = cache.rate - f64::from(batch.binary_targets[i]);
        acc += err * err;
    }
    Ok(acc / n as f64)
}

/// Train with surrogate-gradient BPTT and Adam. The loss is the MSE of
/// the spike rate against the binary target; the last
/// `validation_fraction` of the samples is held out.
pub fn train_snn(
    batch: &SpikeTrainBatch,
    config: &TrainConfig,
    lif: &LifConfig,
) -> Result<(SnnParams, Vec<EpochLoss>)> {
    config.validate()?;
    lif.validate()?;
    if batch.is_empty() {
        return Err(Error::Validation("empty training batch".into()));
    }

    let n = batch.len();
    let val_len = (n as f64 * config.validation_fraction).floor() as usize;
    let train_len = n - val_len;
    if train_len == 0 {
        return Err(Error::Validation("no training samples after carve".into()));
    }
    if config.batch_size > train_len {
        return Err(Error::Validation(format!(
            "batch_size {} exceeds {} training samples",
            config.batch_size, train_len
        )));
    }

    let mut params = SnnParams::init(config.hidden_size, batch.time_window, *lif, config.seed);
    let mut adam = AdamState::new(&params.block_sizes(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_len).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for minibatch in order.chunks(config.batch_size) {
            let (loss, grads) = loss_and_grads(&params, batch, minibatch, ForwardMode::Hard)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss * minibatch.len() as f64;
            let grad_blocks = grads.blocks();
            let mut param_blocks = params.blocks_mut();
            let mut pairs: Vec<(&mut [f64], &[f64])> = param_blocks
                .iter_mut()
                .zip(grad_blocks.iter())
                .map(|(p, g)| (&mut **p, *g))
                .collect();
            adam.step(&mut pairs);
        }
        if !params.w1.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let val = if val_len > 0 {
            Some(rate_mse(&params, batch, train_len..n)?)
        } else {
            None
        };
        history.push(EpochLoss {
            epoch,
            train: epoch_loss / train_len as f64,
            val,
        });
    }
    Ok((params, history))
}

/// Hard-threshold predictions for every sample in the batch.
pub fn predict_batch(params: &SnnParams, batch: &SpikeTrainBatch) -> Result<Vec<SpikeForecast>> {
    (0..batch.len())
        .map(|i| forward_snn(params, batch, i).map(|(f, _)| f))
        .collect()
}

/// Fraction of samples whose binary prediction matches the target.
pub fn binary_accuracy(params: &SnnParams, batch: &SpikeTrainBatch) -> Result<f64> {
    let forecasts = predict_batch(params, batch)?;
    let hits = forecasts
        .iter()
        .zip(&batch.binary_targets)
        .filter(|(f, &y)| f.binary_prediction == y)
        .count();
    Ok(hits as f64 / batch.len() as f64)
}

/// Checkpoint in the same JSON format as the LSTM.
pub fn write_checkpoint<W: Write>(params: &SnnParams, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, params)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<SnnParams> {
    Ok(serde_json::from_reader(input)?)
}

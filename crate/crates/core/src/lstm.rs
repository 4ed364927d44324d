//! Single-layer LSTM forecaster: forward pass, full backpropagation
//! through time, Adam minibatch training, and recursive multi-step
//! forecasting. Double precision throughout so gradients can be checked
//! against central finite differences.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optim::AdamState;
use crate::series::WindowedDataset;

/// Gate weights and output head of a single LSTM layer. Gate matrices act
/// on the concatenated `[x_t; h_{t-1}]` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub window_len: usize,
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_o: Matrix,
    pub w_g: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl LstmParams {
    /// Seeded init: weights uniform in `(-k, k)` with `k = 1/sqrt(hidden)`,
    /// forget-gate bias pinned to 1.0.
    pub fn init(hidden_size: usize, window_len: usize, seed: u64) -> Self {
        assert!(hidden_size >= 1 && window_len >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1.0 / (hidden_size as f64).sqrt();
        let cols = 1 + hidden_size;
        let mut mat = |rows: usize, cols: usize| {
            Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-k..k))
        };
        let w_f = mat(hidden_size, cols);
        let w_i = mat(hidden_size, cols);
        let w_o = mat(hidden_size, cols);
        let w_g = mat(hidden_size, cols);
        let mut vector = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-k..k)).collect()
        };
        let b_i = vector(hidden_size);
        let b_o = vector(hidden_size);
        let b_g = vector(hidden_size);
        let w_y = vector(hidden_size);
        let b_y = rng.gen_range(-k..k);
        Self {
            input_size: 1,
            hidden_size,
            window_len,
            w_f,
            w_i,
            w_o,
            w_g,
            b_f: vec![1.0; hidden_size],
            b_i,
            b_o,
            b_g,
            w_y,
            b_y,
        }
    }

    pub fn zeros(hidden_size: usize, window_len: usize) -> Self {
        let cols = 1 + hidden_size;
        Self {
            input_size: 1,
            hidden_size,
            window_len,
            w_f: Matrix::zeros(hidden_size, cols),
            w_i: Matrix::zeros(hidden_size, cols),
            w_o: Matrix::zeros(hidden_size, cols),
            w_g: Matrix::zeros(hidden_size, cols),
            b_f: vec![0.0; hidden_size],
            b_i: vec![0.0; hidden_size],
            b_o: vec![0.0; hidden_size],
            b_g: vec![0.0; hidden_size],
            w_y: vec![0.0; hidden_size],
            b_y: 0.0,
        }
    }

    fn block_sizes(&self) -> Vec<usize> {
        let w = self.hidden_size * (1 + self.hidden_size);
        vec![
            w,
            w,
            w,
            w,
            self.hidden_size,
            self.hidden_size,
            self.hidden_size,
            self.hidden_size,
            self.hidden_size,
            1,
        ]
    }

    /// Parameter blocks in a fixed order (gates, biases, output head).
    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_f.data_mut(),
            self.w_i.data_mut(),
            self.w_o.data_mut(),
            self.w_g.data_mut(),
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_o,
            &mut self.b_g,
            &mut self.w_y,
            std::slice::from_mut(&mut self.b_y),
        ]
    }
}

/// Per-parameter gradient accumulator, shaped like [`LstmParams`].
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_o: Matrix,
    pub w_g: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl LstmGrads {
    pub fn zeros(params: &LstmParams) -> Self {
        let h = params.hidden_size;
        let cols = 1 + h;
        Self {
            w_f: Matrix::zeros(h, cols),
            w_i: Matrix::zeros(h, cols),
            w_o: Matrix::zeros(h, cols),
            w_g: Matrix::zeros(h, cols),
            b_f: vec![0.0; h],
            b_i: vec![0.0; h],
            b_o: vec![0.0; h],
            b_g: vec![0.0; h],
            w_y: vec![0.0; h],
            b_y: 0.0,
        }
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        vec![
            self.w_f.data(),
            self.w_i.data(),
            self.w_o.data(),
            self.w_g.data(),
            &self.b_f,
            &self.b_i,
            &self.b_o,
            &self.b_g,
            &self.w_y,
            std::slice::from_ref(&self.b_y),
        ]
    }
}

/// Intermediate activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmCache {
    xs: Vec<f64>,
    f: Vec<Vec<f64>>,
    i: Vec<Vec<f64>>,
    o: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    /// Cell states, index 0 is the initial zero state.
    c: Vec<Vec<f64>>,
    /// Hidden states, index 0 is the initial zero state.
    h: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    pub prediction: f64,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One forward pass over a window: standard gate equations per step with
/// zero initial state, prediction from the final hidden state.
pub fn forward(params: &LstmParams, window: &[f64]) -> Result<(f64, LstmCache)> {
    let hidden = params.hidden_size;
    let steps = window.len();
    if steps == 0 {
        return Err(Error::Validation("empty input window".into()));
    }

    let mut cache = LstmCache {
        xs: window.to_vec(),
        f: Vec::with_capacity(steps),
        i: Vec::with_capacity(steps),
        o: Vec::with_capacity(steps),
        g: Vec::with_capacity(steps),
        c: vec![vec![0.0; hidden]],
        h: vec![vec![0.0; hidden]],
        tanh_c: Vec::with_capacity(steps),
        prediction: 0.0,
    };

    let mut z = vec![0.0; 1 + hidden];
    let mut gate = vec![0.0; hidden];
    for (t, &x) in window.iter().enumerate() {
        z[0] = x;
        z[1..].copy_from_slice(&cache.h[t]);

        params.w_f.matvec(&z, &mut gate);
        let f: Vec<f64> = gate
            .iter()
            .zip(&params.b_f)
            .map(|(v, b)| sigmoid(v + b))
            .collect();
        params.w_i.matvec(&z, &mut gate);
        let i: Vec<f64> = gate
            .iter()
            .zip(&params.b_i)
            .map(|(v, b)| sigmoid(v + b))
            .collect();
        params.w_o.matvec(&z, &mut gate);
        let o: Vec<f64> = gate
            .iter()
            .zip(&params.b_o)
            .map(|(v, b)| sigmoid(v + b))
            .collect();
        params.w_g.matvec(&z, &mut gate);
        let g: Vec<f64> = gate
            .iter()
            .zip(&params.b_g)
            .map(|(v, b)| (v + b).tanh())
            .collect();

        let c: Vec<f64> = (0..hidden)
            .map(|j| f[j] * cache.c[t][j] + i[j] * g[j])
            .collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hidden).map(|j| o[j] * tanh_c[j]).collect();

        if !(c.iter().all(|v| v.is_finite()) && h.iter().all(|v| v.is_finite())) {
            return Err(Error::Numeric {
                step: t,
                context: "lstm cell state".into(),
            });
        }

        cache.f.push(f);
        cache.i.push(i);
        cache.o.push(o);
        cache.g.push(g);
        cache.c.push(c);
        cache.h.push(h);
        cache.tanh_c.push(tanh_c);
    }

    let h_last = cache.h.last().unwrap();
    let prediction: f64 =
        params.w_y.iter().zip(h_last).map(|(w, h)| w * h).sum::<f64>() + params.b_y;
    if !prediction.is_finite() {
        return Err(Error::Numeric {
            step: steps - 1,
            context: "output head".into(),
        });
    }
    cache.prediction = prediction;
    Ok((prediction, cache))
}

/// Backpropagate `d(loss)/d(prediction)` through the cached forward pass,
/// accumulating into `grads`.
pub fn backward(params: &LstmParams, cache: &LstmCache, dpred: f64, grads: &mut LstmGrads) {
    let hidden = params.hidden_size;
    let steps = cache.xs.len();

    let h_last = cache.h.last().unwrap();
    for j in 0..hidden {
        grads.w_y[j] += dpred * h_last[j];
    }
    grads.b_y += dpred;

    let mut dh: Vec<f64> = params.w_y.iter().map(|w| w * dpred).collect();
    let mut dc = vec![0.0; hidden];
    let mut z = vec![0.0; 1 + hidden];
    let mut dz_concat = vec![0.0; 1 + hidden];

    for t in (0..steps).rev() {
        let f = &cache.f[t];
        let i = &cache.i[t];
        let o = &cache.o[t];
        let g = &cache.g[t];
        let tanh_c = &cache.tanh_c[t];
        let c_prev = &cache.c[t];

        let mut dzf = vec![0.0; hidden];
        let mut dzi = vec![0.0; hidden];
        let mut dzo = vec![0.0; hidden];
        let mut dzg = vec![0.0; hidden];
        for j in 0..hidden {
            let do_j = dh[j] * tanh_c[j];
            dc[j] += dh[j] * o[j] * (1.0 - tanh_c[j] * tanh_c[j]);
            let df_j = dc[j] * c_prev[j];
            let di_j = dc[j] * g[j];
            let dg_j = dc[j] * i[j];
            dzf[j] = df_j * f[j] * (1.0 - f[j]);
            dzi[j] = di_j * i[j] * (1.0 - i[j]);
            dzo[j] = do_j * o[j] * (1.0 - o[j]);
            dzg[j] = dg_j * (1.0 - g[j] * g[j]);
        }

        z[0] = cache.xs[t];
        z[1..].copy_from_slice(&cache.h[t]);
        grads.w_f.add_outer(&dzf, &z);
        grads.w_i.add_outer(&dzi, &z);
        grads.w_o.add_outer(&dzo, &z);
        grads.w_g.add_outer(&dzg, &z);
        for j in 0..hidden {
            grads.b_f[j] += dzf[j];
            grads.b_i[j] += dzi[j];
            grads.b_o[j] += dzo[j];
            grads.b_g[j] += dzg[j];
        }

        dz_concat.iter_mut().for_each(|v| *v = 0.0);
        params.w_f.add_tr_matvec(&dzf, &mut dz_concat);
        params.w_i.add_tr_matvec(&dzi, &mut dz_concat);
        params.w_o.add_tr_matvec(&dzo, &mut dz_concat);
        params.w_g.add_tr_matvec(&dzg, &mut dz_concat);

        dh.copy_from_slice(&dz_concat[1..]);
        for j in 0..hidden {
            dc[j] *= f[j];
        }
    }
}

/// Mean squared error and its gradients over a batch of windows.
pub fn loss_and_grads(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<(f64, LstmGrads)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let mut grads = LstmGrads::zeros(params);
    let scale = 1.0 / inputs.len() as f64;
    let mut loss = 0.0;
    for (window, &target) in inputs.iter().zip(targets) {
        let (pred, cache) = forward(params, window)?;
        let err = pred - target;
        loss += err * err * scale;
        backward(params, &cache, 2.0 * err * scale, &mut grads);
    }
    Ok((loss, grads))
}

/// Training hyperparameters shared by the LSTM and the spiking network.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub window_len: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Carved chronologically off the end of the training samples.
    pub validation_fraction: f64,
    pub learning_rate: f64,
    pub hidden_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            window_len: 12,
            batch_size: 32,
            seed: 0,
            validation_fraction: 0.1,
            learning_rate: 1e-3,
            hidden_size: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Validation("epochs must be >= 1".into()));
        }
        if self.window_len < 1 {
            return Err(Error::Validation("window_len must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Validation("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Validation(
                "validation_fraction must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Train and validation loss for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub val: Option<f64>,
}

/// Loss history CSV: `epoch,train_loss,val_loss`.
pub fn write_loss_csv<W: Write>(history: &[EpochLoss], mut out: W) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_loss")?;
    for e in history {
        match e.val {
            Some(v) => writeln!(out, "{},{},{}", e.epoch, e.train, v)?,
            None => writeln!(out, "{},{},", e.epoch, e.train)?,
        }
    }
    Ok(())
}

fn mean_squared_error(params: &LstmParams, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (window, &target) in inputs.iter().zip(targets) {
        let (pred, _) = forward(params, window)?;
        acc += (pred - target) * (pred - target);
    }
    Ok(acc / inputs.len() as f64)
}

/// Minibatch MSE training with seeded shuffling. The last
/// `validation_fraction` of the samples is held out for the per-epoch
/// validation loss and never trained on.
pub fn train(dataset: &WindowedDataset, config: &TrainConfig) -> Result<(LstmParams, Vec<EpochLoss>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Validation("empty training dataset".into()));
    }
    if dataset.window_len != config.window_len {
        return Err(Error::ShapeMismatch(format!(
            "dataset window {} vs config window {}",
            dataset.window_len, config.window_len
        )));
    }

    let n = dataset.len();
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

    let mut params = LstmParams::init(config.hidden_size, config.window_len, config.seed);
    let mut adam = AdamState::new(&params.block_sizes(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_len).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<Vec<f64>> = batch.iter().map(|&i| dataset.inputs[i].clone()).collect();
            let targets: Vec<f64> = batch.iter().map(|&i| dataset.targets[i]).collect();
            let (loss, grads) = loss_and_grads(&params, &inputs, &targets)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            let grad_blocks = grads.blocks();
            let mut param_blocks = params.blocks_mut();
            let mut pairs: Vec<(&mut [f64], &[f64])> = param_blocks
                .iter_mut()
                .zip(grad_blocks.iter())
                .map(|(p, g)| (&mut **p, *g))
                .collect();
            adam.step(&mut pairs);
        }
        let train_loss = epoch_loss / train_len as f64;
        let val = if val_len > 0 {
            let v = mean_squared_error(
                &params,
                &dataset.inputs[train_len..],
                &dataset.targets[train_len..],
            )?;
            if !v.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            Some(v)
        } else {
            None
        };
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train: train_loss,
            val,
        });
    }
    Ok((params, history))
}

/// Predict one step, shift the window, append, repeat. Returns `horizon`
/// predictions on the scaled axis; the caller inverts the scaling.
pub fn forecast_recursive(params: &LstmParams, seed_window: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if seed_window.len() != params.window_len {
        return Err(Error::ShapeMismatch(format!(
            "seed window length {} vs trained window {}",
            seed_window.len(),
            params.window_len
        )));
    }
    let mut window = seed_window.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (pred, _) = forward(params, &window)?;
        out.push(pred);
        window.rotate_left(1);
        *window.last_mut().unwrap() = pred;
    }
    Ok(out)
}

/// Checkpoint: JSON map of parameter name to row-major array with shape.
pub fn write_checkpoint<W: Write>(params: &LstmParams, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, params)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<LstmParams> {
    Ok(serde_json::from_reader(input)?)
}

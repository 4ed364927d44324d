//! Series transformations shared by every model: differencing, min-max
//! scaling, train/test splits, sliding windows, and latency spike encoding.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A series differenced `order` times, together with the leading original
/// values needed to invert the transform exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencedSeries {
    pub values: Vec<f64>,
    pub order: usize,
    /// First `order` values of the original series.
    pub anchors: Vec<f64>,
}

/// Apply first-differencing `d` times.
pub fn difference(values: &[f64], d: usize) -> Result<DifferencedSeries> {
    if values.len() <= d {
        return Err(Error::TooShort(format!(
            "cannot difference length {} series {d} times",
            values.len()
        )));
    }
    let anchors = values[..d].to_vec();
    let mut current = values.to_vec();
    for _ in 0..d {
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(DifferencedSeries {
        values: current,
        order: d,
        anchors,
    })
}

/// Exact inverse of [`difference`].
pub fn undifference(diff: &DifferencedSeries) -> Vec<f64> {
    let d = diff.order;
    debug_assert_eq!(diff.anchors.len(), d);
    // First value of the series at each differencing level, derived by
    // differencing the anchor prefix.
    let mut firsts = Vec::with_capacity(d);
    let mut level = diff.anchors.clone();
    for _ in 0..d {
        firsts.push(level[0]);
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let mut current = diff.values.clone();
    for k in (0..d).rev() {
        let mut rebuilt = Vec::with_capacity(current.len() + 1);
        rebuilt.push(firsts[k]);
        for v in &current {
            rebuilt.push(rebuilt[rebuilt.len() - 1] + v);
        }
        current = rebuilt;
    }
    current
}

/// Linear map taking `[min, max]` to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalerParams {
    pub min: f64,
    pub max: f64,
}

impl ScalerParams {
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.min + y * (self.max - self.min)
    }

    pub fn apply_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_slice(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}

/// Fit min-max scaling parameters. Requires at least two distinct values.
pub fn fit_minmax(values: &[f64]) -> Result<ScalerParams> {
    if values.len() < 2 {
        return Err(Error::TooShort(
            "min-max fit needs at least 2 values".into(),
        ));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Validation("non-finite values in scaler fit".into()));
    }
    if max <= min {
        return Err(Error::DegenerateScale);
    }
    Ok(ScalerParams { min, max })
}

/// Overlapping (input-window, next-value) supervised pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub window_len: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Samples at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> WindowedDataset {
        WindowedDataset {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            window_len: self.window_len,
        }
    }
}

/// Restructure a scaled series into overlapping windows, each paired with
/// the value that follows it.
pub fn make_windows(scaled: &[f64], window_len: usize) -> Result<WindowedDataset> {
    if window_len < 1 {
        return Err(Error::Validation("window_len must be >= 1".into()));
    }
    if scaled.len() <= window_len {
        return Err(Error::TooShort(format!(
            "need more than {window_len} points, got {}",
            scaled.len()
        )));
    }
    let n = scaled.len() - window_len;
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        inputs.push(scaled[i..i + window_len].to_vec());
        targets.push(scaled[i + window_len]);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        window_len,
    })
}

/// 80/20 train/test index split. Chronological mode keeps the first 80%
/// for training; shuffled mode permutes indices with the given seed first.
pub fn split_80_20(
    n_samples: usize,
    shuffle: bool,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_samples < 5 {
        return Err(Error::Validation(format!(
            "need at least 5 samples to split, got {n_samples}"
        )));
    }
    let train_len = n_samples * 4 / 5;
    let mut indices: Vec<usize> = (0..n_samples).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
    }
    let test = indices.split_off(train_len);
    Ok((indices, test))
}

/// Latency-encoded spike trains plus thresholded binary targets.
///
/// Each (sample, window-position) pair carries exactly one spike whose
/// time index encodes the scaled value: larger values spike earlier.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrainBatch {
    /// Flat binary tensor, sample-major then window-position then step.
    spikes: Vec<u8>,
    pub n_samples: usize,
    pub time_window: usize,
    pub time_steps: usize,
    pub binary_targets: Vec<u8>,
}

impl SpikeTrainBatch {
    /// Assemble a batch from a flat spike tensor; validates dimensions and
    /// binary-ness.
    pub fn from_parts(
        spikes: Vec<u8>,
        n_samples: usize,
        time_window: usize,
        time_steps: usize,
        binary_targets: Vec<u8>,
    ) -> Result<Self> {
        if spikes.len() != n_samples * time_window * time_steps {
            return Err(Error::ShapeMismatch(format!(
                "{} spikes for {n_samples}x{time_window}x{time_steps}",
                spikes.len()
            )));
        }
        if binary_targets.len() != n_samples {
            return Err(Error::ShapeMismatch(format!(
                "{} targets for {n_samples} samples",
                binary_targets.len()
            )));
        }
        if spikes.iter().chain(&binary_targets).any(|&v| v > 1) {
            return Err(Error::Validation("spike tensor must be binary".into()));
        }
        Ok(Self {
            spikes,
            n_samples,
            time_window,
            time_steps,
            binary_targets,
        })
    }

    #[inline]
    pub fn spike(&self, sample: usize, position: usize, step: usize) -> u8 {
        self.spikes[(sample * self.time_window + position) * self.time_steps + step]
    }

    /// The spikes of one sample as a `time_window x time_steps` block.
    pub fn sample(&self, sample: usize) -> &[u8] {
        let stride = self.time_window * self.time_steps;
        &self.spikes[sample * stride..(sample + 1) * stride]
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    pub fn subset(&self, indices: &[usize]) -> SpikeTrainBatch {
        let stride = self.time_window * self.time_steps;
        let mut spikes = Vec::with_capacity(indices.len() * stride);
        for &i in indices {
            spikes.extend_from_slice(self.sample(i));
        }
        SpikeTrainBatch {
            spikes,
            n_samples: indices.len(),
            time_window: self.time_window,
            time_steps: self.time_steps,
            binary_targets: indices.iter().map(|&i| self.binary_targets[i]).collect(),
        }
    }

    /// Raster CSV: one row per spike cell, `sample,window_position,time_step,spike`.
    pub fn write_raster_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sample,window_position,time_step,spike")?;
        for s in 0..self.n_samples {
            for w in 0..self.time_window {
                for t in 0..self.time_steps {
                    writeln!(out, "{s},{w},{t},{}", self.spike(s, w, t))?;
                }
            }
        }
        Ok(())
    }
}

/// Index of the single spike encoding scaled value `v`: time-to-first-spike,
/// larger values spike earlier.
pub fn latency_index(v: f64, time_steps: usize) -> usize {
    let clamped = v.clamp(0.0, 1.0);
    ((1.0 - clamped) * (time_steps as f64 - 1.0)).round() as usize
}

/// Latency-encode a windowed dataset. Requires window values in `[0, 1]`.
pub fn encode_latency(windows: &WindowedDataset, time_steps: usize) -> Result<SpikeTrainBatch> {
    if time_steps < 2 {
        return Err(Error::Validation("time_steps must be >= 2".into()));
    }
    let time_window = windows.window_len;
    let n = windows.len();
    let mut spikes = vec![0u8; n * time_window * time_steps];
    for (s, window) in windows.inputs.iter().enumerate() {
        for (w, &v) in window.iter().enumerate() {
            let t = latency_index(v, time_steps);
            spikes[(s * time_window + w) * time_steps + t] = 1;
        }
    }
    let binary_targets = windows
        .targets
        .iter()
        .map(|&t| u8::from(t >= 0.5))
        .collect();
    Ok(SpikeTrainBatch {
        spikes,
        n_samples: n,
        time_window,
        time_steps,
        binary_targets,
    })
}

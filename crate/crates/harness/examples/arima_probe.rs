use tempcast_core::lstm::{self, TrainConfig};
use tempcast_core::metrics::evaluate;
use tempcast_core::series::{fit_minmax, make_windows, split_80_20};
use tempcast_harness::runner::seasonal_naive;
use tempcast_harness::synth::SynthCity;

fn main() {
    run_all();
}

fn run_all() {
    for &noise in &[0.25f64] {
        let mut city = SynthCity::new("A", "T", 80, 42);
        city.noise_sd = noise;
        let values = city.values();
        let n = values.len();
        let window = std::env::var("W").map(|v| v.parse().unwrap()).unwrap_or(12);
        let n_samples = n - window;
        let (train_idx, test_idx) = split_80_20(n_samples, false, 42).unwrap();
        let train_end = train_idx.len() + window;
        let scaler = fit_minmax(&values[..train_end]).unwrap();
        let scaled = scaler.apply_slice(&values);
        let windows = make_windows(&scaled, window).unwrap();
        let train_ds = windows.subset(&train_idx);
        let test_ds = windows.subset(&test_idx);

        let baseline = seasonal_naive(&values[..train_end], n - train_end, 12);
        let baseline_mse = evaluate(&values[train_end..], &baseline).unwrap().mse;

        for &(lr, epochs, hidden) in &[(2e-3, 100usize, 32usize), (2e-3, 150, 32), (2e-3, 200, 32), (2e-3, 250, 32), (2e-3, 300, 32), (1e-3, 200, 32), (1e-3, 300, 32)] {
            let tc = TrainConfig { epochs, window_len: window, batch_size: 32, seed: 42, validation_fraction: 0.1, learning_rate: lr, hidden_size: hidden };
            let (params, _) = lstm::train(&train_ds, &tc).unwrap();
            let preds: Vec<f64> = test_ds.inputs.iter().map(|w| lstm::forward(&params, w).unwrap().0).collect();
            let pc = scaler.invert_slice(&preds);
            let ac = scaler.invert_slice(&test_ds.targets);
            let mse = evaluate(&ac, &pc).unwrap().mse;
            println!("noise={noise} lr={lr} epochs={epochs} hidden={hidden}: lstm °C mse {mse:.4} vs baseline {baseline_mse:.4} -> {}", if mse < baseline_mse { "BEATS" } else { "loses" });
        }
    }
}

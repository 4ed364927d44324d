//! Property tests for the series transforms and metric identities.

use proptest::prelude::*;
use tempcast_core::metrics::evaluate;
use tempcast_core::series::{
    difference, encode_latency, fit_minmax, latency_index, make_windows, split_80_20,
    undifference, WindowedDataset,
};

fn finite_series(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e4f64..1e4, min_len..min_len + 60)
}

proptest! {
    #[test]
    fn difference_round_trips_for_small_orders(values in finite_series(5)) {
        for d in 0..=2usize {
            let diff = difference(&values, d).unwrap();
            prop_assert_eq!(diff.values.len(), values.len() - d);
            let back = undifference(&diff);
            prop_assert_eq!(back.len(), values.len());
            for (a, b) in back.iter().zip(&values) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn scaling_round_trips_and_stays_in_unit_interval(values in finite_series(3)) {
        prop_assume!(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            > values.iter().cloned().fold(f64::INFINITY, f64::min));
        let scaler = fit_minmax(&values).unwrap();
        for &v in &values {
            let s = scaler.apply(v);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((scaler.invert(s) - v).abs() < 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn windows_reconstruct_the_series(values in finite_series(6), window in 1usize..5) {
        prop_assume!(values.len() > window);
        let ds = make_windows(&values, window).unwrap();
        let mut rebuilt = ds.inputs[0].clone();
        rebuilt.extend(&ds.targets);
        prop_assert_eq!(rebuilt, values);
    }

    #[test]
    fn chronological_split_keeps_train_before_test(n in 5usize..200) {
        let (train, test) = split_80_20(n, false, 0).unwrap();
        let max_train = *train.last().unwrap();
        prop_assert!(test.iter().all(|&t| t > max_train));
        prop_assert_eq!(train.len(), n * 4 / 5);
        prop_assert_eq!(train.len() + test.len(), n);
    }

    #[test]
    fn shuffled_split_is_a_partition(n in 5usize..200, seed in 0u64..1000) {
        let (train, test) = split_80_20(n, true, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).cloned().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn latency_code_is_injective_per_grid_cell(a in 0.0f64..1.0, b in 0.0f64..1.0, steps in 2usize..64) {
        let ia = latency_index(a, steps);
        let ib = latency_index(b, steps);
        // Values in different grid cells spike at different times.
        let cell = |v: f64| ((1.0 - v) * (steps as f64 - 1.0)).round() as usize;
        if cell(a) != cell(b) {
            prop_assert_ne!(ia, ib);
        } else {
            prop_assert_eq!(ia, ib);
        }
    }

    #[test]
    fn every_spike_train_has_exactly_one_spike(
        window in prop::collection::vec(0.0f64..1.0, 1..12),
        steps in 2usize..32,
    ) {
        let ds = WindowedDataset {
            inputs: vec![window.clone()],
            targets: vec![0.5],
            window_len: window.len(),
        };
        let batch = encode_latency(&ds, steps).unwrap();
        for w in 0..batch.time_window {
            let total: u32 = (0..batch.time_steps).map(|t| batch.spike(0, w, t) as u32).sum();
            prop_assert_eq!(total, 1);
        }
    }

    #[test]
    fn metric_scale_equivariance(
        y in prop::collection::vec(-100.0f64..100.0, 4..40),
        noise in prop::collection::vec(-10.0f64..10.0, 4..40),
        a in 0.5f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let n = y.len().min(noise.len());
        let y = &y[..n];
        let pred: Vec<f64> = y.iter().zip(&noise[..n]).map(|(t, e)| t + e).collect();
        let base = evaluate(y, &pred).unwrap();
        prop_assume!(base.r_squared.is_finite());

        let y2: Vec<f64> = y.iter().map(|v| a * v + b).collect();
        let p2: Vec<f64> = pred.iter().map(|v| a * v + b).collect();
        let scaled = evaluate(&y2, &p2).unwrap();

        let tol = 1e-9 * base.mse.abs().max(1.0);
        prop_assert!((scaled.mse - a * a * base.mse).abs() < tol * a * a);
        prop_assert!((scaled.r_squared - base.r_squared).abs() < 1e-9);
        prop_assert!((scaled.explained_variance - base.explained_variance).abs() < 1e-9);
    }

    #[test]
    fn mae_never_exceeds_rmse(
        y in prop::collection::vec(-100.0f64..100.0, 2..40),
        noise in prop::collection::vec(-10.0f64..10.0, 2..40),
    ) {
        let n = y.len().min(noise.len());
        let pred: Vec<f64> = y[..n].iter().zip(&noise[..n]).map(|(t, e)| t + e).collect();
        let m = evaluate(&y[..n], &pred).unwrap();
        prop_assert!(m.mae <= m.rmse + 1e-12);
        prop_assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-12 * m.mse.max(1.0));
    }
}

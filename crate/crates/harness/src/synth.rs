//! Synthetic city generator: seasonal temperature series in the exact
//! ingest CSV format, plus a matching annual CO2 file. Used by the test
//! suites and the `synth` subcommand.

use std::fs;
use std::path::Path;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic per-city signal: 12-month sinusoid + linear trend +
/// seeded Gaussian noise.
#[derive(Debug, Clone)]
pub struct SynthCity {
    pub city: String,
    pub country: String,
    pub start_year: i32,
    pub months: usize,
    pub base_temp: f64,
    pub amplitude: f64,
    pub trend_per_month: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SynthCity {
    pub fn new(city: &str, country: &str, years: usize, seed: u64) -> Self {
        Self {
            city: city.to_string(),
            country: country.to_string(),
            start_year: 1900,
            months: years * 12,
            base_temp: 10.0,
            amplitude: 8.0,
            trend_per_month: 0.0015,
            noise_sd: 0.25,
            seed,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.months)
            .map(|t| {
                self.base_temp
                    + self.amplitude * (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin()
                    + self.trend_per_month * t as f64
                    + self.noise_sd * gaussian(&mut rng)
            })
            .collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Temperature CSV with the exact major-city column layout.
pub fn write_temperature_csv(path: &Path, cities: &[SynthCity]) -> Result<()> {
    let mut out = String::from(
        "dt,AverageTemperature,AverageTemperatureUncertainty,City,Country,Latitude,Longitude\n",
    );
    for c in cities {
        for (t, v) in c.values().iter().enumerate() {
            let year = c.start_year + (t / 12) as i32;
            let month = t % 12 + 1;
            out.push_str(&format!(
                "{year:04}-{month:02}-01,{v:.3},0.5,{},{},0.00N,0.00E\n",
                c.city, c.country
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Annual CO2 emissions rising linearly per country over the city years.
pub fn write_co2_csv(path: &Path, cities: &[SynthCity]) -> Result<()> {
    let mut out = String::from("country,year,co2\n");
    let mut seen = std::collections::BTreeSet::new();
    for c in cities {
        if !seen.insert(c.country.clone()) {
            continue;
        }
        let years = c.months / 12;
        for y in 0..years {
            let year = c.start_year + y as i32;
            let emissions = 100.0 + 5.0 * y as f64;
            out.push_str(&format!("{},{year},{emissions:.1}\n", c.country));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Demo dataset plus a ready-to-run config pointing at it.
pub fn write_demo_dataset(dir: &Path, n_cities: usize, years: usize, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cities: Vec<SynthCity> = (0..n_cities)
        .map(|i| {
            let mut c = SynthCity::new(&format!("City{i}"), &format!("Country{i}"), years, seed + i as u64);
            c.base_temp += i as f64 * 2.0;
            c
        })
        .collect();
    write_temperature_csv(&dir.join("temperatures.csv"), &cities)?;
    write_co2_csv(&dir.join("co2.csv"), &cities)?;

    let config = serde_json::json!({
        "data": {
            "temperature_csv": dir.join("temperatures.csv"),
            "co2_csv": dir.join("co2.csv")
        },
        "cities": cities.iter().map(|c| format!("{},{}", c.city, c.country)).collect::<Vec<_>>(),
        "models": ["arima", "sarimax", "lstm", "snn"],
        "split_mode": "chronological",
        "seed": seed,
        "output_dir": dir.join("run"),
        "lstm": { "epochs": 30, "hidden_size": 32 },
        "snn": { "time_window": 24, "time_steps": 4, "learning_rate": 0.02 }
    });
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(&config)? + "\n",
    )?;
    Ok(())
}

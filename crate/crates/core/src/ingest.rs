//! CSV ingestion: temperature and CO2 parsing, per-city splitting, gap
//! repair, monthly resampling, and annual-to-monthly exogenous alignment.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Expected header of the major-city temperature file, in order.
pub const TEMPERATURE_COLUMNS: [&str; 7] = [
    "dt",
    "AverageTemperature",
    "AverageTemperatureUncertainty",
    "City",
    "Country",
    "Latitude",
    "Longitude",
];

/// Physical sanity bounds for a surface temperature reading, in Celsius.
const TEMP_MIN_C: f64 = -95.0;
const TEMP_MAX_C: f64 = 60.0;

/// Minimum usable monthly series length: one 12-month input window plus
/// at least 12 targets.
pub const MIN_USABLE_MONTHS: usize = 24;

/// A calendar month, the time axis unit for every monthly series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    /// 1-based month.
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month }
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    pub fn plus_months(self, n: usize) -> Self {
        let total = (self.year as i64) * 12 + (self.month as i64 - 1) + n as i64;
        Self::new((total.div_euclid(12)) as i32, (total.rem_euclid(12) + 1) as u32)
    }

    /// Number of months from `earlier` to `self` (may be negative).
    pub fn months_since(self, earlier: YearMonth) -> i64 {
        (self.year as i64 - earlier.year as i64) * 12 + (self.month as i64 - earlier.month as i64)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Gap-free monthly series; index `i` corresponds exactly to
/// `start + i` months. Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: YearMonth,
    values: Vec<f64>,
    label: String,
}

impl TimeSeries {
    pub fn new(start: YearMonth, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("time series must be non-empty".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at index {bad}; repair missing values first"
            )));
        }
        Ok(Self {
            start,
            values,
            label: label.into(),
        })
    }

    pub fn start(&self) -> YearMonth {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, index: usize) -> YearMonth {
        self.start.plus_months(index)
    }

    pub fn months(&self) -> Vec<YearMonth> {
        (0..self.len()).map(|i| self.month_at(i)).collect()
    }

    /// First `n` observations as a new series (same start).
    pub fn head(&self, n: usize) -> Result<TimeSeries> {
        if n == 0 || n > self.len() {
            return Err(Error::Validation(format!(
                "head({n}) out of range for series of length {}",
                self.len()
            )));
        }
        TimeSeries::new(self.start, self.values[..n].to_vec(), self.label.clone())
    }
}

/// One row of the temperature file. Missing readings stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub avg_temperature: Option<f64>,
    pub temperature_uncertainty: Option<f64>,
    pub city: String,
    pub country: String,
    pub latitude: String,
    pub longitude: String,
}

/// (city, country) pair; compared byte-exact after whitespace trim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CityKey {
    pub city: String,
    pub country: String,
}

impl CityKey {
    pub fn new(city: &str, country: &str) -> Result<Self> {
        let city = city.trim();
        let country = country.trim();
        if city.is_empty() || country.is_empty() {
            return Err(Error::Validation(
                "city and country must be non-empty".into(),
            ));
        }
        Ok(Self {
            city: city.to_string(),
            country: country.to_string(),
        })
    }
}

impl fmt::Display for CityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.city, self.country)
    }
}

/// Annual CO2 emissions for one country and year.
#[derive(Debug, Clone, PartialEq)]
pub struct Co2Record {
    pub country: String,
    pub year: i32,
    pub emissions: f64,
}

/// Header names of the CO2 file; overridable from the harness config.
#[derive(Debug, Clone, PartialEq)]
pub struct Co2Columns {
    pub country: String,
    pub year: String,
    pub emissions: String,
}

impl Default for Co2Columns {
    fn default() -> Self {
        Self {
            country: "country".into(),
            year: "year".into(),
            emissions: "co2".into(),
        }
    }
}

fn parse_optional_temp(raw: &str, line: u64, what: &str) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw.parse().map_err(|_| Error::Row {
        line,
        message: format!("unparseable {what} `{raw}`"),
    })?;
    if !v.is_finite() {
        return Err(Error::Row {
            line,
            message: format!("non-finite {what}"),
        });
    }
    Ok(Some(v))
}

/// Parse the temperature CSV. Empty temperature cells become `None`,
/// never zero. Streaming: rows are decoded one at a time.
pub fn parse_temperature_csv<R: Read>(reader: R) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    for (i, expected) in TEMPERATURE_COLUMNS.iter().enumerate() {
        match headers.get(i) {
            Some(actual) if actual.trim() == *expected => {}
            _ => {
                return Err(Error::Format(format!(
                    "missing or misplaced column `{expected}` (position {i})"
                )))
            }
        }
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let record = row?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("");

        let date = NaiveDate::parse_from_str(get(0).trim(), "%Y-%m-%d").map_err(|_| Error::Row {
            line,
            message: format!("unparseable date `{}`", get(0)),
        })?;
        let avg_temperature = parse_optional_temp(get(1), line, "temperature")?;
        if let Some(t) = avg_temperature {
            if !(TEMP_MIN_C..=TEMP_MAX_C).contains(&t) {
                return Err(Error::Row {
                    line,
                    message: format!("temperature {t} outside [{TEMP_MIN_C}, {TEMP_MAX_C}] C"),
                });
            }
        }
        let temperature_uncertainty = parse_optional_temp(get(2), line, "uncertainty")?;
        let city = get(3).trim();
        let country = get(4).trim();
        if city.is_empty() || country.is_empty() {
            return Err(Error::Row {
                line,
                message: "empty city or country".into(),
            });
        }
        out.push(RawRecord {
            date,
            avg_temperature,
            temperature_uncertainty,
            city: city.to_string(),
            country: country.to_string(),
            latitude: get(5).trim().to_string(),
            longitude: get(6).trim().to_string(),
        });
    }
    Ok(out)
}

/// Bucket records per city, each bucket sorted ascending by date.
/// Duplicate (city, date) rows are both kept, in stable input order.
pub fn split_by_city(records: &[RawRecord]) -> Result<BTreeMap<CityKey, Vec<RawRecord>>> {
    let mut buckets: BTreeMap<CityKey, Vec<RawRecord>> = BTreeMap::new();
    for rec in records {
        let key = CityKey::new(&rec.city, &rec.country)?;
        buckets.entry(key).or_default().push(rec.clone());
    }
    for bucket in buckets.values_mut() {
        bucket.sort_by_key(|r| r.date);
    }
    Ok(buckets)
}

/// Repair missing values and resample to a gap-free monthly series.
///
/// Leading/trailing missing runs are dropped, interior gaps are filled by
/// linear interpolation between the nearest present neighbors, then
/// observations are averaged per calendar month. Months entirely absent
/// from the input are interpolated the same way on the monthly grid.
pub fn repair_and_resample(records: &[RawRecord]) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records for city".into()));
    }
    let key = CityKey::new(&records[0].city, &records[0].country)?;
    for rec in records {
        if CityKey::new(&rec.city, &rec.country)? != key {
            return Err(Error::Validation(format!(
                "records span multiple cities: {key} vs {}, {}",
                rec.city, rec.country
            )));
        }
    }

    let mut obs: Vec<(NaiveDate, Option<f64>)> = records
        .iter()
        .map(|r| (r.date, r.avg_temperature))
        .collect();
    obs.sort_by_key(|(d, _)| *d);

    let first = obs.iter().position(|(_, v)| v.is_some());
    let last = obs.iter().rposition(|(_, v)| v.is_some());
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => {
            return Err(Error::InsufficientData(format!(
                "{key}: all temperature values missing"
            )))
        }
    };
    let obs = &obs[first..=last];

    let values = interpolate_gaps(obs.iter().map(|(_, v)| *v).collect());
    if values.len() < MIN_USABLE_MONTHS {
        return Err(Error::InsufficientData(format!(
            "{key}: only {} observations after repair (need {MIN_USABLE_MONTHS})",
            values.len()
        )));
    }

    // Average per calendar month, preserving chronological order.
    let mut monthly: Vec<(YearMonth, f64, usize)> = Vec::new();
    for ((date, _), value) in obs.iter().zip(values.iter()) {
        let ym = YearMonth::from_date(*date);
        match monthly.last_mut() {
            Some((m, sum, count)) if *m == ym => {
                *sum += value;
                *count += 1;
            }
            _ => monthly.push((ym, *value, 1)),
        }
    }

    // Lay the means onto the full month grid; absent months stay None and
    // are filled by the same interpolation rule.
    let start = monthly[0].0;
    let end = monthly.last().unwrap().0;
    let total = end.months_since(start) as usize + 1;
    let mut grid: Vec<Option<f64>> = vec![None; total];
    for (ym, sum, count) in &monthly {
        grid[ym.months_since(start) as usize] = Some(sum / *count as f64);
    }
    let filled = interpolate_gaps(grid);

    if filled.len() < MIN_USABLE_MONTHS {
        return Err(Error::InsufficientData(format!(
            "{key}: only {} monthly observations (need {MIN_USABLE_MONTHS})",
            filled.len()
        )));
    }
    TimeSeries::new(start, filled, key.to_string())
}

/// Linear interpolation of interior `None` runs by position. The first
/// and last entries must be present.
fn interpolate_gaps(values: Vec<Option<f64>>) -> Vec<f64> {
    debug_assert!(values.first().map_or(false, Option::is_some));
    debug_assert!(values.last().map_or(false, Option::is_some));
    let mut out = Vec::with_capacity(values.len());
    let mut i = 0;
    while i < values.len() {
        match values[i] {
            Some(v) => {
                out.push(v);
                i += 1;
            }
            None => {
                let prev = out[out.len() - 1];
                let mut j = i;
                while values[j].is_none() {
                    j += 1;
                }
                let next = values[j].unwrap();
                let span = (j - i + 1) as f64;
                for k in 0..(j - i) {
                    out.push(prev + (next - prev) * ((k + 1) as f64) / span);
                }
                i = j;
            }
        }
    }
    out
}

/// Parse the CO2 CSV with configurable header names.
pub fn parse_co2_csv<R: Read>(reader: R, columns: &Co2Columns) -> Result<Vec<Co2Record>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))
    };
    let country_idx = find(&columns.country)?;
    let year_idx = find(&columns.year)?;
    let emissions_idx = find(&columns.emissions)?;

    let mut seen: HashSet<(String, i32)> = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let record = row?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| record.get(i).unwrap_or("").trim();

        let country = get(country_idx);
        if country.is_empty() {
            return Err(Error::Row {
                line,
                message: "empty country".into(),
            });
        }
        let year: i32 = get(year_idx).parse().map_err(|_| Error::Row {
            line,
            message: format!("unparseable year `{}`", get(year_idx)),
        })?;
        let emissions: f64 = get(emissions_idx).parse().map_err(|_| Error::Row {
            line,
            message: format!("unparseable emissions `{}`", get(emissions_idx)),
        })?;
        if !emissions.is_finite() || emissions < 0.0 {
            return Err(Error::Validation(format!(
                "line {line}: emissions must be finite and >= 0, got {emissions}"
            )));
        }
        if !seen.insert((country.to_string(), year)) {
            return Err(Error::DuplicateKey(format!("({country}, {year})")));
        }
        out.push(Co2Record {
            country: country.to_string(),
            year,
            emissions,
        });
    }
    Ok(out)
}

/// Annual emissions for `country` expanded to the given months as a step
/// function: each month carries its calendar year's value; years outside
/// the covered range carry the nearest covered year's value.
pub fn exog_values_for_months(
    co2: &[Co2Record],
    country: &str,
    months: &[YearMonth],
) -> Result<Vec<f64>> {
    let country = country.trim();
    let by_year: BTreeMap<i32, f64> = co2
        .iter()
        .filter(|r| r.country.trim() == country)
        .map(|r| (r.year, r.emissions))
        .collect();
    if by_year.is_empty() {
        return Err(Error::Alignment(format!(
            "no CO2 emissions recorded for country `{country}`"
        )));
    }
    let (&min_year, _) = by_year.first_key_value().unwrap();
    let (&max_year, _) = by_year.last_key_value().unwrap();
    Ok(months
        .iter()
        .map(|m| {
            let year = m.year.clamp(min_year, max_year);
            // Years inside the covered range but absent from the file fall
            // back to the closest earlier covered year.
            *by_year
                .range(..=year)
                .next_back()
                .map(|(_, v)| v)
                .unwrap_or_else(|| by_year.first_key_value().unwrap().1)
        })
        .collect())
}

/// Monthly exogenous series aligned 1:1 with `temps`.
pub fn align_exogenous(temps: &TimeSeries, co2: &[Co2Record], country: &str) -> Result<TimeSeries> {
    let values = exog_values_for_months(co2, country, &temps.months())?;
    TimeSeries::new(temps.start(), values, format!("co2: {country}"))
}

//! Observation types, rate computation, CSV ingestion and predictor rescaling.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{KpartError, Result};

const RATE_CONSISTENCY_TOL: f64 = 1e-12;

/// Offenses per person for one locality-year.
///
/// Returns `crime_count / population`. `year` is only used to label the error.
pub fn compute_rate(crime_count: f64, population: f64, year: i32) -> Result<f64> {
    if !(population > 0.0) || !population.is_finite() {
        return Err(KpartError::Domain {
            year,
            message: format!("population must be positive, got {population}"),
        });
    }
    if !(crime_count >= 0.0) || !crime_count.is_finite() {
        return Err(KpartError::Domain {
            year,
            message: format!("crime count must be nonnegative, got {crime_count}"),
        });
    }
    Ok(crime_count / population)
}

/// One locality-year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    year: i32,
    population: f64,
    crime_count: Option<f64>,
    rate: f64,
    rate_given: bool,
}

impl Observation {
    /// At least one of `crime_count` and `rate` must be given. When both are, they
    /// must agree with `crime_count / population` to a relative 1e-12.
    pub fn new(
        year: i32,
        population: f64,
        crime_count: Option<f64>,
        rate: Option<f64>,
    ) -> Result<Self> {
        if !(population > 0.0) || !population.is_finite() {
            return Err(KpartError::Domain {
                year,
                message: format!("population must be positive, got {population}"),
            });
        }
        let rate_value = match (crime_count, rate) {
            (None, None) => {
                return Err(KpartError::Domain {
                    year,
                    message: "neither a crime count nor a rate is present".into(),
                })
            }
            (Some(count), None) => compute_rate(count, population, year)?,
            (None, Some(r)) => {
                if !(r >= 0.0) || !r.is_finite() {
                    return Err(KpartError::Domain {
                        year,
                        message: format!("rate must be nonnegative, got {r}"),
                    });
                }
                r
            }
            (Some(count), Some(r)) => {
                let expected = compute_rate(count, population, year)?;
                if (r - expected).abs() > RATE_CONSISTENCY_TOL * expected.abs() {
                    return Err(KpartError::Domain {
                        year,
                        message: format!("rate {r} disagrees with count/population = {expected}"),
                    });
                }
                r
            }
        };
        Ok(Observation {
            year,
            population,
            crime_count,
            rate: rate_value,
            rate_given: rate.is_some(),
        })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn population(&self) -> f64 {
        self.population
    }

    pub fn crime_count(&self) -> Option<f64> {
        self.crime_count
    }

    /// The rate, either as supplied or derived from the count.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// The rate exactly as supplied, `None` if it was derived.
    pub fn supplied_rate(&self) -> Option<f64> {
        self.rate_given.then_some(self.rate)
    }
}

/// Year-ordered observations for one locality.
#[derive(Debug, Clone, PartialEq)]
pub struct CrimeSeries {
    name: String,
    observations: Vec<Observation>,
}

impl CrimeSeries {
    /// Years must be strictly increasing and the series nonempty.
    pub fn new(name: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        let name = name.into();
        if observations.is_empty() {
            return Err(KpartError::EmptySeries(name));
        }
        if let Some(w) = observations.windows(2).find(|w| w[1].year <= w[0].year) {
            return Err(KpartError::Format(format!(
                "series `{name}`: years must be strictly increasing ({} followed by {})",
                w[0].year, w[1].year
            )));
        }
        Ok(CrimeSeries { name, observations })
    }

    /// Builds a series directly from (year, population, rate) triples.
    pub fn from_rates(
        name: impl Into<String>,
        years: &[i32],
        population: &[f64],
        rates: &[f64],
    ) -> Result<Self> {
        if years.len() != population.len() || years.len() != rates.len() {
            return Err(KpartError::contract(format!(
                "column lengths differ: {} years, {} populations, {} rates",
                years.len(),
                population.len(),
                rates.len()
            )));
        }
        let obs = years
            .iter()
            .zip(population)
            .zip(rates)
            .map(|((&y, &p), &r)| Observation::new(y, p, None, Some(r)))
            .collect::<Result<Vec<_>>>()?;
        CrimeSeries::new(name, obs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        self.observations.iter().map(|o| o.year).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.population).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.rate).collect()
    }

    /// True when every observation carries a crime count.
    pub fn has_counts(&self) -> bool {
        self.observations.iter().all(|o| o.crime_count.is_some())
    }
}

/// Header names used to locate the input columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub year: String,
    pub population: String,
    pub count: String,
    pub rate: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            year: "year".into(),
            population: "population".into(),
            count: "count".into(),
            rate: "rate".into(),
        }
    }
}

/// Bookkeeping from [`load_series`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Years of rows skipped for a blank crime value.
    pub skipped_years: Vec<i32>,
}

impl LoadReport {
    pub fn rows_skipped(&self) -> usize {
        self.skipped_years.len()
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let skipped = self.rows_skipped();
        write!(
            f,
            "{} rows read, {} row{} skipped",
            self.rows_read,
            skipped,
            if skipped == 1 { "" } else { "s" }
        )
    }
}

/// Loads a series from a CSV file. The series is named after the file stem.
pub fn load_series(
    path: impl AsRef<Path>,
    columns: &ColumnMap,
) -> Result<(CrimeSeries, LoadReport)> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    let file = std::fs::File::open(path)?;
    read_series(file, name, columns)
}

/// Reads a series from CSV text.
///
/// Rows with no crime value (blank count and blank rate) are skipped and listed
/// in the report. Rates are derived from counts where only a count is given.
pub fn read_series<R: Read>(
    reader: R,
    name: impl Into<String>,
    columns: &ColumnMap,
) -> Result<(CrimeSeries, LoadReport)> {
    let name = name.into();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| KpartError::Format(format!("cannot read header: {e}")))?
        .clone();
    let find = |col: &str| headers.iter().position(|h| h == col);

    let year_idx = find(&columns.year)
        .ok_or_else(|| KpartError::Format(format!("missing column `{}`", columns.year)))?;
    let pop_idx = find(&columns.population)
        .ok_or_else(|| KpartError::Format(format!("missing column `{}`", columns.population)))?;
    let count_idx = find(&columns.count);
    let rate_idx = find(&columns.rate);
    if count_idx.is_none() && rate_idx.is_none() {
        return Err(KpartError::Format(format!(
            "missing column `{}` or `{}`",
            columns.count, columns.rate
        )));
    }

    let mut observations = Vec::new();
    let mut skipped_years = Vec::new();
    let mut rows_read = 0;
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| KpartError::Format(format!("row {line}: {e}")))?;
        rows_read += 1;
        let cell = |idx: Option<usize>| idx.and_then(|i| record.get(i)).unwrap_or("");
        let year: i32 = cell(Some(year_idx)).parse().map_err(|_| {
            KpartError::Format(format!(
                "row {line}: column `{}` is not an integer year: `{}`",
                columns.year,
                cell(Some(year_idx))
            ))
        })?;
        let count_cell = cell(count_idx);
        let rate_cell = cell(rate_idx);
        if count_cell.is_empty() && rate_cell.is_empty() {
            skipped_years.push(year);
            continue;
        }
        let population = parse_number(cell(Some(pop_idx)), line, &columns.population)?;
        let count = (!count_cell.is_empty())
            .then(|| parse_number(count_cell, line, &columns.count))
            .transpose()?;
        let rate = (!rate_cell.is_empty())
            .then(|| parse_number(rate_cell, line, &columns.rate))
            .transpose()?;
        observations.push(Observation::new(year, population, count, rate)?);
    }
    if observations.is_empty() {
        return Err(KpartError::EmptySeries(name));
    }
    observations.sort_by_key(|o| o.year);
    let series = CrimeSeries::new(name, observations)?;
    Ok((
        series,
        LoadReport {
            rows_read,
            skipped_years,
        },
    ))
}

fn parse_number(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            KpartError::Format(format!(
                "row {line}: column `{column}` is not numeric: `{cell}`"
            ))
        })
}

/// Writes `year,population,count,rate` rows. Counts are left blank when absent,
/// rates are left blank when they were derived from counts.
pub fn write_series<W: Write>(writer: W, series: &CrimeSeries) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| KpartError::Io(e.into());
    wtr.write_record(["year", "population", "count", "rate"])
        .map_err(io)?;
    for obs in series.observations() {
        let count = obs.crime_count.map(|c| c.to_string()).unwrap_or_default();
        let rate = obs
            .supplied_rate()
            .map(|r| r.to_string())
            .unwrap_or_default();
        wtr.write_record([
            obs.year.to_string(),
            obs.population.to_string(),
            count,
            rate,
        ])
        .map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Affine map `x = (u - shift) / scale` taking raw predictor values onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleTransform {
    shift: f64,
    scale: f64,
}

impl ScaleTransform {
    pub fn new(shift: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !shift.is_finite() {
            return Err(KpartError::contract(format!(
                "scale transform needs finite shift and positive scale, got ({shift}, {scale})"
            )));
        }
        Ok(ScaleTransform { shift, scale })
    }

    pub fn identity() -> Self {
        ScaleTransform {
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn forward(&self, u: f64) -> f64 {
        (u - self.shift) / self.scale
    }

    pub fn inverse(&self, x: f64) -> f64 {
        x * self.scale + self.shift
    }

    pub fn forward_all(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.forward(v)).collect()
    }
}

/// Min/max scaling onto [0, 1]; a constant vector gets scale 1.
pub fn make_scale(x: &[f64]) -> Result<ScaleTransform> {
    if x.is_empty() {
        return Err(KpartError::contract(
            "cannot build a scale from an empty vector",
        ));
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = if hi > lo { hi - lo } else { 1.0 };
    ScaleTransform::new(lo, scale)
}

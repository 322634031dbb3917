//! Raw scalar series and their slicing into daily curves.
//!
//! A [`RawSeries`] is a regularly sampled signal (half-hourly load in the
//! reference application). [`slice_series`] cuts it into consecutive
//! segments of `samples_per_day` samples, producing a [`FunctionalDataset`]
//! in which the covariate of day `i` is the curve of day `i - 1`.

use std::io::Write;
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};

use crate::error::{Error, Result};

/// Date assumed when a series carries no parseable start label.
pub const DEFAULT_START: &str = "2002-01-01";

/// A regularly sampled scalar series.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    values: Vec<f64>,
    start_label: String,
    samples_per_day: usize,
}

impl RawSeries {
    pub fn new(values: Vec<f64>, start_label: impl Into<String>, samples_per_day: usize) -> Result<Self> {
        let start_label = start_label.into();
        if values.is_empty() {
            return Err(Error::InvalidSeries("no values".into()));
        }
        if samples_per_day < 2 {
            return Err(Error::InvalidSeries(format!(
                "samples_per_day must be at least 2, got {samples_per_day}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at index {pos}",
                values[pos]
            )));
        }
        parse_date(&start_label)?;
        Ok(Self {
            values,
            start_label,
            samples_per_day,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start_label(&self) -> &str {
        &self.start_label
    }

    pub fn samples_per_day(&self) -> usize {
        self.samples_per_day
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One functional observation: a day of samples on the uniform grid
/// `t = 0, 1, ..., samples_per_day - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    samples: Vec<f64>,
    day_index: usize,
    month: u8,
}

impl Curve {
    pub fn new(samples: Vec<f64>, day_index: usize, month: u8) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidCurve("empty curve".into()));
        }
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidCurve(format!("month label {month} outside 1..=12")));
        }
        if day_index == 0 {
            return Err(Error::InvalidCurve("day_index starts at 1".into()));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("non-finite sample at t={pos}")));
        }
        Ok(Self {
            samples,
            day_index,
            month,
        })
    }

    /// Curve with placeholder calendar data, for ad-hoc queries.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, 1, 1)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn day_index(&self) -> usize {
        self.day_index
    }

    pub fn month(&self) -> u8 {
        self.month
    }
}

/// Ordered daily curves. Covariate of day `i` is curve `i - 1`, response is curve `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    curves: Vec<Curve>,
    samples_per_day: usize,
}

impl FunctionalDataset {
    pub fn new(curves: Vec<Curve>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 curves to form a pair, got {}",
                curves.len()
            )));
        }
        let samples_per_day = curves[0].len();
        for w in curves.windows(2) {
            if w[1].day_index != w[0].day_index + 1 {
                return Err(Error::InvalidSeries(format!(
                    "day_index jumps from {} to {}",
                    w[0].day_index, w[1].day_index
                )));
            }
        }
        if let Some(c) = curves.iter().find(|c| c.len() != samples_per_day) {
            return Err(Error::InvalidCurve(format!(
                "day {} has {} samples, expected {samples_per_day}",
                c.day_index,
                c.len()
            )));
        }
        Ok(Self {
            curves,
            samples_per_day,
        })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn samples_per_day(&self) -> usize {
        self.samples_per_day
    }

    /// Number of (covariate, response) pairs.
    pub fn n_pairs(&self) -> usize {
        self.curves.len() - 1
    }

    /// Iterate `(covariate, response)` pairs in day order.
    pub fn pairs(&self) -> impl Iterator<Item = (&Curve, &Curve)> + '_ {
        self.curves.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Concatenated samples of every curve.
    pub fn flatten(&self) -> Vec<f64> {
        self.curves.iter().flat_map(|c| c.samples.iter().copied()).collect()
    }

    /// Pointwise mean over a range of curves (by position).
    pub fn mean_profile(&self, range: std::ops::Range<usize>) -> Vec<f64> {
        let mut mean = vec![0.0; self.samples_per_day];
        let n = range.len().max(1) as f64;
        for c in &self.curves[range] {
            for (m, v) in mean.iter_mut().zip(&c.samples) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

fn parse_date(label: &str) -> Result<NaiveDate> {
    let head = label.get(..10).unwrap_or(label);
    NaiveDate::parse_from_str(head, "%Y-%m-%d")
        .map_err(|e| Error::InvalidSeries(format!("start label '{label}' is not YYYY-MM-DD: {e}")))
}

/// Cut a series into consecutive days of `samples_per_day` samples.
///
/// A length that is not a whole number of days is rejected rather than
/// truncated. Month labels follow the civil calendar starting at
/// `start_label`, one day per curve.
pub fn slice_series(raw: &RawSeries) -> Result<FunctionalDataset> {
    let period = raw.samples_per_day;
    let len = raw.values.len();
    let remainder = len % period;
    if remainder != 0 {
        return Err(Error::NotDivisible {
            len,
            period,
            remainder,
        });
    }
    let start = parse_date(&raw.start_label)?;
    let curves = raw
        .values
        .chunks_exact(period)
        .enumerate()
        .map(|(i, chunk)| {
            let date = start + Duration::days(i as i64);
            Curve::new(chunk.to_vec(), i + 1, date.month() as u8)
        })
        .collect::<Result<Vec<_>>>()?;
    FunctionalDataset::new(curves)
}

/// Read one numeric column of a CSV file with a header row.
///
/// The first column is taken as the timestamp; its leading `YYYY-MM-DD`
/// becomes the start label (falling back to [`DEFAULT_START`]).
pub fn load_csv(path: impl AsRef<Path>, column: &str, samples_per_day: usize) -> Result<RawSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })?;

    let mut values = Vec::new();
    let mut start_label = None;
    for (i, record) in reader.records().enumerate() {
        // Row numbers count data rows from 1.
        let row = i + 1;
        let record = record.map_err(|e| Error::CsvRow {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let field = record.get(col).ok_or_else(|| Error::CsvRow {
            path: path.to_path_buf(),
            row,
            message: format!("missing field '{column}'"),
        })?;
        let value: f64 = field.parse().map_err(|_| Error::CsvRow {
            path: path.to_path_buf(),
            row,
            message: format!("cannot parse '{field}' as a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::CsvRow {
                path: path.to_path_buf(),
                row,
                message: format!("non-finite value '{field}'"),
            });
        }
        if start_label.is_none() {
            start_label = Some(
                record
                    .get(0)
                    .filter(|_| col != 0)
                    .filter(|ts| parse_date(ts).is_ok())
                    .map(|ts| ts[..10].to_string())
                    .unwrap_or_else(|| DEFAULT_START.to_string()),
            );
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::NoDataRows {
            path: path.to_path_buf(),
        });
    }
    RawSeries::new(values, start_label.unwrap_or_else(|| DEFAULT_START.into()), samples_per_day)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Write a series as `timestamp,value` rows, the schema [`load_csv`] reads.
pub fn write_series_csv<W: Write>(raw: &RawSeries, out: W) -> Result<()> {
    let start = parse_date(&raw.start_label)?;
    let period = raw.samples_per_day;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp", "value"]).map_err(io_err)?;
    for (j, v) in raw.values.iter().enumerate() {
        let date = start + Duration::days((j / period) as i64);
        let minutes = (j % period) * 1440 / period;
        let ts = format!("{}T{:02}:{:02}", date.format("%Y-%m-%d"), minutes / 60, minutes % 60);
        w.write_record([ts, v.to_string()]).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Dump curves as `day_index,t,value` rows.
pub fn write_curves_csv<W: Write>(data: &FunctionalDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day_index", "t", "value"]).map_err(io_err)?;
    for c in data.curves() {
        for (t, v) in c.samples.iter().enumerate() {
            w.write_record([c.day_index.to_string(), t.to_string(), v.to_string()])
                .map_err(io_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn io_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

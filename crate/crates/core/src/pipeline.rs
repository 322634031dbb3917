//! Learn/test forecasting runs and their monthly error reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{io_err, FunctionalDataset};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, LearningSet, Predictor};
use crate::functionals::{eval_functional, FunctionalSpec};
use crate::selection::{
    global_knn_bandwidth, predict_with_fallback, BandwidthPolicy, Neighbors, Pool,
};

pub const MONTH_NAMES: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// Consecutive learning days followed by consecutive test days.
///
/// Learning pairs are the days `2..=n_learn` (each with the previous day as
/// covariate); test days are `n_learn + 1 ..= n_learn + n_test`, so the first
/// test covariate is the last learning day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub n_learn: usize,
    pub n_test: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::FOUR_YEARS
    }
}

impl SplitSpec {
    /// Three years of learning, one year of test.
    pub const FOUR_YEARS: SplitSpec = SplitSpec {
        n_learn: 1096,
        n_test: 365,
    };

    pub fn validate(&self, n_days: usize) -> Result<()> {
        if self.n_learn < 2 || self.n_test == 0 {
            return Err(Error::InvalidSplit(format!(
                "need n_learn >= 2 and n_test >= 1, got {}/{}",
                self.n_learn, self.n_test
            )));
        }
        if self.n_learn + self.n_test > n_days {
            return Err(Error::InvalidSplit(format!(
                "{} + {} days exceed the {n_days} available",
                self.n_learn, self.n_test
            )));
        }
        Ok(())
    }

    pub fn learn_days(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.n_learn
    }

    pub fn test_days(&self) -> std::ops::RangeInclusive<usize> {
        self.n_learn + 1..=self.n_learn + self.n_test
    }
}

/// Estimator settings plus the rule giving the covariate bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub estimator: EstimatorConfig,
    pub bandwidth: BandwidthPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Predicted {
        predicted: f64,
        rae: f64,
        fallback_used: bool,
    },
    Skipped {
        reason: String,
    },
}

/// One test day.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub day_index: usize,
    pub month: u8,
    /// `φ(Z_i)`, absent when the functional has no value that day.
    pub actual: Option<f64>,
    pub predictor: Predictor,
    pub outcome: Outcome,
}

impl ForecastRecord {
    pub fn predicted(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Predicted { predicted, .. } => Some(predicted),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn rae(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Predicted { rae, .. } => Some(rae),
            Outcome::Skipped { .. } => None,
        }
    }
}

/// Relative absolute error `|actual - predicted| / |actual|`.
pub fn rae(actual: f64, predicted: f64) -> Result<f64> {
    if actual == 0.0 {
        return Err(Error::ZeroActual);
    }
    Ok((actual - predicted).abs() / actual.abs())
}

/// Forecast every test day from the previous day's curve.
///
/// Estimation failures are recorded per day; the run only fails on invalid
/// inputs.
pub fn run_forecast(
    data: &FunctionalDataset,
    phi: &FunctionalSpec,
    predictor: Predictor,
    cfg: &ForecastConfig,
    split: &SplitSpec,
) -> Result<Vec<ForecastRecord>> {
    split.validate(data.len())?;
    cfg.estimator.validate()?;
    let learn = LearningSet::from_dataset(data, split.learn_days(), phi, cfg.estimator.semimetric)?;
    cfg.bandwidth.validate(learn.len() + 1)?;
    forecast_days(data, &learn, phi, predictor, cfg, split)
}

/// [`run_forecast`] with a prepared learning set.
pub fn forecast_days(
    data: &FunctionalDataset,
    learn: &LearningSet,
    phi: &FunctionalSpec,
    predictor: Predictor,
    cfg: &ForecastConfig,
    split: &SplitSpec,
) -> Result<Vec<ForecastRecord>> {
    split.validate(data.len())?;
    let global_h = match cfg.bandwidth {
        BandwidthPolicy::GlobalKnn { k } => Some(global_knn_bandwidth(&learn.distance_matrix(), k)?),
        _ => None,
    };
    let limit = match cfg.bandwidth {
        BandwidthPolicy::Knn { k } | BandwidthPolicy::GlobalKnn { k } => k,
        BandwidthPolicy::Fixed { .. } => 0,
    };
    let pool = Pool {
        responses: learn.responses(),
        pool: learn.responses().to_vec(),
    };
    let curves = data.curves();
    let days: Vec<usize> = split.test_days().collect();
    days.par_iter()
        .map(|&day| {
            // curves are 1-based by day
            let covariate = &curves[day - 2];
            let response = &curves[day - 1];
            let actual = eval_functional(phi, response)?.value();
            let skipped = |reason: String| ForecastRecord {
                day_index: day,
                month: response.month(),
                actual,
                predictor,
                outcome: Outcome::Skipped { reason },
            };
            let Some(actual_value) = actual else {
                return Ok(skipped("functional has no value".into()));
            };
            if actual_value == 0.0 {
                return Ok(skipped("actual is zero".into()));
            }
            let distances = learn.distances(covariate)?;
            let neighbors = Neighbors::new(&distances, |_| true, limit);
            let h = match (cfg.bandwidth, global_h) {
                (BandwidthPolicy::Fixed { h }, _) => h,
                (BandwidthPolicy::Knn { k }, _) => neighbors.knn_bandwidth(k)?,
                (BandwidthPolicy::GlobalKnn { .. }, Some(h)) => h,
                (BandwidthPolicy::GlobalKnn { .. }, None) => unreachable!("global bandwidth resolved above"),
            };
            Ok(match predict_with_fallback(&neighbors, &pool, &cfg.estimator, h, predictor) {
                Ok((predicted, fallback_used)) => ForecastRecord {
                    day_index: day,
                    month: response.month(),
                    actual,
                    predictor,
                    outcome: Outcome::Predicted {
                        predicted,
                        rae: rae(actual_value, predicted)?,
                        fallback_used,
                    },
                },
                Err(e @ (Error::ZeroNeighborhood { .. } | Error::DegenerateDensity)) => skipped(e.to_string()),
                Err(e) => return Err(e),
            })
        })
        .collect()
}

/// Monthly RAE summary, fractions (not percent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthRow {
    pub month: u8,
    pub count: usize,
    pub mape: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub predictor: Option<Predictor>,
    /// Months with at least one scored record, ascending.
    pub months: Vec<MonthRow>,
    pub overall_mape: f64,
    pub scored: usize,
    pub skipped: usize,
}

impl EvaluationReport {
    pub fn month(&self, month: u8) -> Option<&MonthRow> {
        self.months.iter().find(|r| r.month == month)
    }
}

/// Sample quantile by linear interpolation between order statistics
/// (`(n - 1) p` positioning). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Group scored records by month: MAPE and RAE quartiles.
pub fn monthly_report(records: &[ForecastRecord]) -> Result<EvaluationReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let predictor = records[0].predictor;
    let predictor = records.iter().all(|r| r.predictor == predictor).then_some(predictor);
    let mut by_month: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0;
    for r in records {
        match r.rae() {
            Some(e) => by_month.entry(r.month).or_default().push(e),
            None => skipped += 1,
        }
    }
    let mut all = Vec::new();
    let months = by_month
        .into_iter()
        .map(|(month, mut errs)| {
            errs.sort_unstable_by(f64::total_cmp);
            all.extend_from_slice(&errs);
            MonthRow {
                month,
                count: errs.len(),
                mape: errs.iter().sum::<f64>() / errs.len() as f64,
                q25: quantile_sorted(&errs, 0.25),
                q50: quantile_sorted(&errs, 0.5),
                q75: quantile_sorted(&errs, 0.75),
            }
        })
        .collect();
    let scored = all.len();
    let overall_mape = if scored > 0 {
        all.sort_unstable_by(f64::total_cmp);
        all.iter().sum::<f64>() / scored as f64
    } else {
        f64::NAN
    };
    Ok(EvaluationReport {
        predictor,
        months,
        overall_mape,
        scored,
        skipped,
    })
}

/// Reports for each predictor present in `records`, in predictor order.
pub fn reports_by_predictor(records: &[ForecastRecord]) -> Result<Vec<EvaluationReport>> {
    let mut groups: BTreeMap<Predictor, Vec<ForecastRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.predictor).or_default().push(r.clone());
    }
    groups.values().map(|g| monthly_report(g)).collect()
}

const RECORD_HEADER: [&str; 8] = [
    "day_index",
    "month",
    "actual",
    "predicted",
    "rae",
    "predictor",
    "fallback_used",
    "skip_reason",
];

/// Write records; skipped days have empty `predicted` and `rae`.
pub fn write_records_csv<W: Write>(records: &[ForecastRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(io_err)?;
    for r in records {
        let actual = r.actual.map(|v| v.to_string()).unwrap_or_default();
        let row = match &r.outcome {
            Outcome::Predicted {
                predicted,
                rae,
                fallback_used,
            } => [
                r.day_index.to_string(),
                r.month.to_string(),
                actual,
                predicted.to_string(),
                rae.to_string(),
                r.predictor.to_string(),
                fallback_used.to_string(),
                String::new(),
            ],
            Outcome::Skipped { reason } => [
                r.day_index.to_string(),
                r.month.to_string(),
                actual,
                String::new(),
                String::new(),
                r.predictor.to_string(),
                "false".into(),
                reason.clone(),
            ],
        };
        w.write_record(row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Read records written by [`write_records_csv`].
pub fn read_records_csv<R: Read>(input: R, source: &std::path::Path) -> Result<Vec<ForecastRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Csv {
        path: source.to_path_buf(),
        message: e.to_string(),
    })?;
    if headers.iter().take(7).ne(RECORD_HEADER.iter().take(7).copied()) {
        return Err(Error::Csv {
            path: source.to_path_buf(),
            message: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let bad = |message: String| Error::CsvRow {
            path: source.to_path_buf(),
            row,
            message,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let num = |j: usize| -> Result<Option<f64>> {
            let s = field(j);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("bad number '{s}' in {}", RECORD_HEADER[j])))
            }
        };
        let day_index = field(0).parse().map_err(|_| bad("bad day_index".into()))?;
        let month: u8 = field(1).parse().map_err(|_| bad("bad month".into()))?;
        if !(1..=12).contains(&month) {
            return Err(bad(format!("month {month} outside 1..=12")));
        }
        let predictor = Predictor::parse(field(5)).ok_or_else(|| bad(format!("unknown predictor '{}'", field(5))))?;
        let outcome = match (num(3)?, num(4)?) {
            (Some(predicted), Some(rae)) => Outcome::Predicted {
                predicted,
                rae,
                fallback_used: field(6) == "true",
            },
            _ => Outcome::Skipped {
                reason: field(7).to_string(),
            },
        };
        out.push(ForecastRecord {
            day_index,
            month,
            actual: num(2)?,
            predictor,
            outcome,
        });
    }
    Ok(out)
}

fn percent(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Month-by-month table: one row per calendar month, four columns
/// (`MAPE_m`, `Q0.25`, `Q0.5`, `Q0.75`, in percent) per predictor.
pub fn write_report_csv<W: Write>(reports: &[EvaluationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["month".to_string()];
    for (i, r) in reports.iter().enumerate() {
        let name = r.predictor.map(|p| p.name().to_string()).unwrap_or_else(|| format!("set{}", i + 1));
        for col in ["mape", "q25", "q50", "q75"] {
            header.push(format!("{name}_{col}"));
        }
    }
    w.write_record(&header).map_err(io_err)?;
    for (m, name) in MONTH_NAMES.iter().enumerate() {
        let mut row = vec![name.to_string()];
        for r in reports {
            match r.month(m as u8 + 1) {
                Some(mr) => row.extend([mr.mape, mr.q25, mr.q50, mr.q75].map(percent)),
                None => row.extend(std::iter::repeat_n("NA".to_string(), 4)),
            }
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Actual-versus-predicted pairs of scored records.
pub fn write_scatter_csv<W: Write>(records: &[ForecastRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day_index", "predictor", "actual", "predicted"]).map_err(io_err)?;
    for r in records {
        if let (Some(a), Some(p)) = (r.actual, r.predicted()) {
            w.write_record([r.day_index.to_string(), r.predictor.to_string(), a.to_string(), p.to_string()])
                .map_err(io_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{slice_series, RawSeries};
    use proptest::prelude::*;

    fn record(month: u8, rae: f64) -> ForecastRecord {
        ForecastRecord {
            day_index: 1,
            month,
            actual: Some(1.0),
            predictor: Predictor::Mode,
            outcome: Outcome::Predicted {
                predicted: 1.0 - rae,
                rae,
                fallback_used: false,
            },
        }
    }

    #[test]
    fn relative_error() {
        assert_eq!(rae(100.0, 95.0).unwrap(), 0.05);
        assert_eq!(rae(7.5, 7.5).unwrap(), 0.0);
        assert!((rae(50.0, 60.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(rae(0.0, 1.0), Err(Error::ZeroActual)));
    }

    #[test]
    fn small_month() {
        let recs: Vec<_> = [0.01, 0.03, 0.05].iter().map(|e| record(3, *e)).collect();
        let rep = monthly_report(&recs).unwrap();
        let m = rep.month(3).unwrap();
        assert!((100.0 * m.mape - 3.0).abs() < 1e-12);
        assert!((100.0 * m.q50 - 3.0).abs() < 1e-12);
        assert!((100.0 * m.q25 - 2.0).abs() < 1e-12);
        assert_eq!(rep.scored, 3);
        assert!(monthly_report(&[]).is_err());
    }

    #[test]
    fn skipped_are_counted_not_scored() {
        let mut recs = vec![record(1, 0.1)];
        recs.push(ForecastRecord {
            outcome: Outcome::Skipped { reason: "x".into() },
            ..record(1, 0.0)
        });
        let rep = monthly_report(&recs).unwrap();
        assert_eq!((rep.scored, rep.skipped), (1, 1));
    }

    #[test]
    fn split_validation() {
        assert!(SplitSpec::FOUR_YEARS.validate(1461).is_ok());
        assert!(SplitSpec::FOUR_YEARS.validate(1460).is_err());
        assert!(SplitSpec { n_learn: 1, n_test: 3 }.validate(10).is_err());
        assert!(SplitSpec { n_learn: 5, n_test: 0 }.validate(10).is_err());
    }

    #[test]
    fn persistent_curves_are_forecast_perfectly() {
        let day: Vec<f64> = (0..48).map(|t| 50.0 + 8.0 * (t as f64 / 7.0).sin()).collect();
        let values: Vec<f64> = std::iter::repeat_n(day, 120).flatten().collect();
        let data = slice_series(&RawSeries::new(values, "2002-01-01", 48).unwrap()).unwrap();
        let split = SplitSpec { n_learn: 80, n_test: 40 };
        let cfg = ForecastConfig {
            estimator: EstimatorConfig::default(),
            bandwidth: BandwidthPolicy::Fixed { h: 1.0 },
        };
        for predictor in Predictor::ALL {
            let recs = run_forecast(&data, &FunctionalSpec::Sup, predictor, &cfg, &split).unwrap();
            assert_eq!(recs.len(), 40);
            for r in &recs {
                let e = r.rae().unwrap();
                assert!(e < 1e-9, "{predictor}: {e}");
            }
        }
    }

    #[test]
    fn record_csv_round_trip() {
        let mut recs = vec![record(2, 0.25), record(5, 0.0)];
        recs.push(ForecastRecord {
            actual: None,
            outcome: Outcome::Skipped { reason: "functional has no value".into() },
            ..record(7, 0.0)
        });
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let back = read_records_csv(&buf[..], std::path::Path::new("mem")).unwrap();
        assert_eq!(back, recs);
    }

    proptest! {
        #[test]
        fn quartiles_are_ordered(errs in proptest::collection::vec((1u8..=12, 0.0f64..2.0), 1..200)) {
            let recs: Vec<_> = errs.iter().map(|(m, e)| record(*m, *e)).collect();
            let rep = monthly_report(&recs).unwrap();
            for m in &rep.months {
                prop_assert!(m.q25 <= m.q50 && m.q50 <= m.q75);
                prop_assert!(m.mape >= 0.0);
            }
            let weighted: f64 = rep.months.iter().map(|m| m.mape * m.count as f64).sum::<f64>() / rep.scored as f64;
            prop_assert!((weighted - rep.overall_mape).abs() < 1e-12);

            let mut reversed = recs.clone();
            reversed.reverse();
            prop_assert_eq!(monthly_report(&reversed).unwrap(), rep);
        }
    }
}

//! Command implementations behind the `fmode` binary. Each returns the bytes
//! of its output file so that runs can be compared and written atomically.

use std::io::Write;
use std::path::Path;

use crate::config::{BandwidthMode, RunConfig};
use crate::curves::{load_csv, slice_series, write_curves_csv, write_series_csv, FunctionalDataset};
use crate::error::Result;
use crate::estimators::LearningSet;
use crate::pipeline::{
    forecast_days, read_records_csv, reports_by_predictor, write_records_csv, write_report_csv,
    write_scatter_csv, ForecastRecord,
};
use crate::selection::select_k_cv_with_matrix;
use crate::simulator::{convergence_experiment, simulate, write_convergence_csv};

/// Daily curves of a CSV series as `day_index,t,value` rows.
pub fn cmd_slice(input: &Path, column: &str, period: usize) -> Result<Vec<u8>> {
    let data = slice_series(&load_csv(input, column, period)?)?;
    let mut out = Vec::new();
    write_curves_csv(&data, &mut out)?;
    Ok(out)
}

/// Simulated series as `timestamp,value` rows.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    let sim = simulate(&cfg.sim)?;
    let mut out = Vec::new();
    write_series_csv(&sim.series, &mut out)?;
    Ok(out)
}

/// Records for every configured predictor. In `cv` mode `k` is chosen on
/// the learning set separately for each predictor.
pub fn forecast_records(cfg: &RunConfig, data: &FunctionalDataset) -> Result<Vec<ForecastRecord>> {
    cfg.validate()?;
    cfg.split.validate(data.len())?;
    let learn = LearningSet::from_dataset(data, cfg.split.learn_days(), &cfg.phi, cfg.estimator.semimetric)?;
    let matrix = (cfg.bandwidth.mode == BandwidthMode::Cv).then(|| learn.distance_matrix());
    let mut records = Vec::new();
    for &predictor in &cfg.predictors {
        let k = match &matrix {
            Some(m) => {
                let cv = cfg.cv_config(predictor, learn.len());
                Some(select_k_cv_with_matrix(&learn, m, &cfg.estimator, &cv)?.best_k)
            }
            None => None,
        };
        let fc = cfg.forecast_config(k)?;
        fc.bandwidth.validate(learn.len() + 1)?;
        records.extend(forecast_days(data, &learn, &cfg.phi, predictor, &fc, &cfg.split)?);
    }
    Ok(records)
}

/// Forecast records CSV for the series in `data`.
pub fn cmd_forecast(cfg: &RunConfig, data: &Path) -> Result<Vec<u8>> {
    cfg.validate()?;
    let dataset = slice_series(&load_csv(data, &cfg.column, cfg.samples_per_day)?)?;
    let records = forecast_records(cfg, &dataset)?;
    let mut out = Vec::new();
    write_records_csv(&records, &mut out)?;
    Ok(out)
}

/// Monthly report CSV, and the actual/predicted scatter CSV.
pub fn cmd_evaluate(records: &Path) -> Result<(Vec<u8>, Vec<u8>)> {
    let file = std::fs::File::open(records)?;
    let records = read_records_csv(file, records)?;
    let reports = reports_by_predictor(&records)?;
    let mut report = Vec::new();
    write_report_csv(&reports, &mut report)?;
    let mut scatter = Vec::new();
    write_scatter_csv(&records, &mut scatter)?;
    Ok((report, scatter))
}

/// Convergence experiment CSV.
pub fn cmd_converge(cfg: &RunConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    let rows = convergence_experiment(&cfg.convergence_config())?;
    let mut out = Vec::new();
    write_convergence_csv(&rows, &mut out)?;
    Ok(out)
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

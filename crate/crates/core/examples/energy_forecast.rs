//! Forecasting the energy drawn during the daily high-load window, with the
//! window either fixed by season or centred on the average peak. The
//! simulated profile keeps the same shape all year, so the seasonal window
//! switches between two response levels that today's curve cannot tell apart.

use fmode::cli::forecast_records;
use fmode::{reports_by_predictor, simulate, slice_series, EnergyWindow, Predictor, RunConfig};

fn main() -> fmode::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.sim.obs_noise_sd = 1.0;
    cfg.predictors = vec![Predictor::Mode, Predictor::Mean];
    let data = slice_series(&simulate(&cfg.sim)?.series)?;
    let learn_profile = data.mean_profile(0..cfg.split.n_learn);
    for window in [EnergyWindow::Seasonal, EnergyWindow::Auto { hours: 3.0 }] {
        cfg.phi = window.resolve(cfg.samples_per_day, &learn_profile)?;
        let reports = reports_by_predictor(&forecast_records(&cfg, &data)?)?;
        let summary: Vec<String> = reports
            .iter()
            .map(|r| format!("{} {:.2}%", r.predictor.map(|p| p.name()).unwrap_or("?"), 100.0 * r.overall_mape))
            .collect();
        println!("{:?}: {:?} -> {}", window, cfg.phi, summary.join(", "));
    }
    Ok(())
}

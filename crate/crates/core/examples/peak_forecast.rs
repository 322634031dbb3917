//! Day-ahead peak forecasting over four simulated years: three years to
//! learn, one to test, monthly RAE summary for each predictor.

use fmode::cli::forecast_records;
use fmode::pipeline::write_report_csv;
use fmode::{reports_by_predictor, simulate, slice_series, RunConfig};

fn main() -> fmode::Result<()> {
    let cfg = RunConfig::default();
    let data = slice_series(&simulate(&cfg.sim)?.series)?;
    let records = forecast_records(&cfg, &data)?;
    let reports = reports_by_predictor(&records)?;
    for r in &reports {
        println!(
            "{:>6}: overall MAPE {:.2}% over {} days ({} skipped)",
            r.predictor.map(|p| p.name()).unwrap_or("?"),
            100.0 * r.overall_mape,
            r.scored,
            r.skipped
        );
    }
    write_report_csv(&reports, std::io::stdout())
}

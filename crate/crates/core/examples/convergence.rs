//! Error of the estimated conditional mode against the true one as the
//! sample grows (a reduced run; the CLI `converge` command does the full one).

use fmode::simulator::write_convergence_csv;
use fmode::{convergence_experiment, ConvergenceConfig, EstimatorConfig, FunctionalSpec, Predictor, SemiMetric, SimConfig};

fn main() -> fmode::Result<()> {
    let cfg = ConvergenceConfig {
        sim: SimConfig { ar_coeff: 0.5, innovation_sd: 0.1, ..SimConfig::default() },
        phi: FunctionalSpec::Sup,
        estimator: EstimatorConfig { semimetric: SemiMetric::L2, ..EstimatorConfig::default() },
        predictor: Predictor::Mode,
        k_grid: None,
        n_list: vec![100, 200, 400, 800],
        replications: 10,
        queries: None,
    };
    let rows = convergence_experiment(&cfg)?;
    write_convergence_csv(&rows, std::io::stdout())
}

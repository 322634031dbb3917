//! Kernel estimation of the conditional mode, median and mean of a scalar
//! functional of tomorrow's curve given today's curve, for functional time
//! series such as daily electricity load profiles.
//!
//! A typical run slices a long series into daily curves, builds learning
//! pairs `(X_i, φ(Z_i))` from consecutive days, picks the covariate bandwidth
//! by k-NN cross-validation, forecasts a test period and summarises the
//! relative absolute errors by month:
//!
//! ```
//! use fmode::{
//!     forecast_days, monthly_report, select_k_cv, simulate, slice_series, CvConfig,
//!     EstimatorConfig, ForecastConfig, FunctionalSpec, LearningSet, BandwidthPolicy,
//!     Predictor, SimConfig, SplitSpec,
//! };
//!
//! let sim = simulate(&SimConfig { n_days: 120, ..SimConfig::default() }).unwrap();
//! let data = slice_series(&sim.series).unwrap();
//! let split = SplitSpec { n_learn: 90, n_test: 30 };
//! let est = EstimatorConfig::default();
//! let learn = LearningSet::from_dataset(&data, split.learn_days(), &FunctionalSpec::Sup, est.semimetric).unwrap();
//! let k = select_k_cv(&learn, &est, &CvConfig::new(Predictor::Mode, vec![5, 10, 20])).unwrap().best_k;
//! let cfg = ForecastConfig { estimator: est, bandwidth: BandwidthPolicy::Knn { k } };
//! let records = forecast_days(&data, &learn, &FunctionalSpec::Sup, Predictor::Mode, &cfg, &split).unwrap();
//! let report = monthly_report(&records).unwrap();
//! assert!(report.overall_mape < 0.2);
//! ```

pub mod cli;
pub mod config;
pub mod curves;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod kernel;
pub mod pipeline;
pub mod selection;
pub mod semimetric;
pub mod simulator;

pub use config::{Overrides, RunConfig};
pub use curves::{load_csv, slice_series, Curve, FunctionalDataset, RawSeries};
pub use error::{Error, Result};
pub use estimators::{
    cond_cdf, cond_density, cond_median, cond_mode, density_curve, nw_regression, predict,
    unnormalized_parts, weights, EstimatorConfig, GridSpec, LearningSet, Predictor, ResponseGrid,
};
pub use functionals::{eval_functional, EnergyWindow, FunctionalSpec, FunctionalValue};
pub use kernel::{kernel_h, kernel_k, CovariateKernel, ResponseKernel};
pub use pipeline::{
    forecast_days, monthly_report, rae, reports_by_predictor, run_forecast, EvaluationReport,
    ForecastConfig, ForecastRecord, Outcome, SplitSpec,
};
pub use selection::{
    global_knn_bandwidth, knn_bandwidth, select_k_cv, BandwidthPolicy, CvConfig, CvLoss,
    CvOutcome,
};
pub use semimetric::{semimetric, SemiMetric};
pub use simulator::{
    convergence_experiment, decomposition_residual, oracle_law, oracle_mode, simulate,
    ConvergenceConfig, NoiseLaw, OracleLaw, Profile, SimConfig,
};

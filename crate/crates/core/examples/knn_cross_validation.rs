//! Leave-one-out scores of the k-NN bandwidth grid.

use fmode::selection::default_k_grid;
use fmode::{select_k_cv, simulate, slice_series, CvConfig, EstimatorConfig, FunctionalSpec, LearningSet, Predictor, SimConfig};

fn main() -> fmode::Result<()> {
    let data = slice_series(&simulate(&SimConfig { n_days: 500, obs_noise_sd: 0.5, ..SimConfig::default() })?.series)?;
    let est = EstimatorConfig::default();
    let learn = LearningSet::from_dataset(&data, 2..=data.len(), &FunctionalSpec::Sup, est.semimetric)?;
    for predictor in Predictor::ALL {
        let cv = CvConfig::new(predictor, default_k_grid(learn.len()));
        let out = select_k_cv(&learn, &est, &cv)?;
        let row: Vec<String> = out.scores.iter().map(|s| format!("{}:{:.3}", s.k, 100.0 * s.score)).collect();
        println!("{predictor:>6} best k = {:>3}  RAE% by k  {}", out.best_k, row.join(" "));
    }
    Ok(())
}

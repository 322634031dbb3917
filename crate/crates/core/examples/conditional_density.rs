//! Conditional density of tomorrow's peak given today's curve, with the
//! three point predictors read off it.

use fmode::{
    cond_cdf, density_curve, knn_bandwidth, predict, simulate, slice_series, EstimatorConfig,
    FunctionalSpec, LearningSet, NoiseLaw, Predictor, SemiMetric, SimConfig,
};

fn main() -> fmode::Result<()> {
    let cfg = SimConfig {
        n_days: 800,
        ar_coeff: 0.6,
        noise_law: NoiseLaw::SkewMix { weight: 0.8, locations: (0.0, 0.15), sds: (0.02, 0.03) },
        ..SimConfig::default()
    };
    let data = slice_series(&simulate(&cfg)?.series)?;
    let learn = LearningSet::from_dataset(&data, 2..=data.len() - 1, &FunctionalSpec::Sup, SemiMetric::L2)?;
    let x = &data.curves()[data.len() - 1];

    let h = knn_bandwidth(x, &learn, 40)?;
    let est = EstimatorConfig { semimetric: SemiMetric::L2, ..EstimatorConfig::default() }.with_bandwidth(h);
    let dens = density_curve(x, &learn, &est)?;
    println!("h = {h:.3}, grid mass = {:.6}", dens.mass_check);

    let top = dens.values.iter().cloned().fold(0.0, f64::max);
    for (y, g) in dens.grid.iter().zip(&dens.values).step_by(16) {
        let bar = "#".repeat((g / top * 50.0).round() as usize);
        println!("{y:8.2} {g:.4} {bar}");
    }
    for p in Predictor::ALL {
        println!("{p:>6}: {:.3}", predict(x, &learn, &est, p)?);
    }
    let median = predict(x, &learn, &est, Predictor::Median)?;
    println!("CDF at median: {:.6}", cond_cdf(x, median, &learn, &est)?);
    Ok(())
}

// Bias/variance split of the density estimate at one point.
//
// With independent days the expectations of the numerator and denominator
// are plain expectations; they are approximated here by averaging over many
// independent learning samples from the same model.

use fmode::simulator::amplitude_curve;
use fmode::{
    decomposition_residual, oracle_law, simulate, slice_series, unnormalized_parts, EstimatorConfig,
    FunctionalSpec, LearningSet, SemiMetric, SimConfig,
};

fn main() -> fmode::Result<()> {
    let model = SimConfig { n_days: 401, ar_coeff: 0.0, innovation_sd: 0.1, ..SimConfig::default() };
    let est = EstimatorConfig { semimetric: SemiMetric::L2, ..EstimatorConfig::default() }.with_bandwidth(4.0);
    let x = amplitude_curve(&model, 0.0)?;
    let law = oracle_law(&model, 0.0, &FunctionalSpec::Sup)?;
    let y = law.mode();
    let g = law.density(y);

    let draw = |seed: u64| -> fmode::Result<(f64, f64)> {
        let data = slice_series(&simulate(&SimConfig { seed, ..model.clone() })?.series)?;
        let learn = LearningSet::from_dataset(&data, 2..=data.len(), &FunctionalSpec::Sup, SemiMetric::L2)?;
        let p = unnormalized_parts(&x, y, &learn, &est)?;
        Ok((p.joint, p.marginal))
    };
    let samples = (1..=200).map(draw).collect::<fmode::Result<Vec<_>>>()?;
    let bar_f = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
    let bar_l = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;

    println!("true density g = {g:.6} at y = {y:.3}");
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10}", "draw", "g_n", "B", "R", "Q", "residual");
    for (i, &(f_n, l_n)) in samples.iter().take(5).enumerate() {
        let d = decomposition_residual(f_n, bar_f, l_n, bar_l, g)?;
        println!("{i:>4} {:>10.6} {:>10.6} {:>10.2e} {:>10.2e} {:>10.1e}", d.g_n, d.bias, d.r, d.q, d.residual);
    }
    Ok(())
}

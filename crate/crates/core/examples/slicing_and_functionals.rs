//! Cut a half-hourly series into daily curves and evaluate scalar
//! functionals on a few of them.

use fmode::{eval_functional, simulate, slice_series, EnergyWindow, FunctionalSpec, SimConfig};

fn main() -> fmode::Result<()> {
    let sim = simulate(&SimConfig { n_days: 365, obs_noise_sd: 0.8, ..SimConfig::default() })?;
    let data = slice_series(&sim.series)?;
    println!("{} samples -> {} curves of {} points", sim.series.len(), data.len(), data.samples_per_day());

    let spd = data.samples_per_day();
    let seasonal = EnergyWindow::Seasonal.resolve(spd, &[])?;
    let auto = EnergyWindow::Auto { hours: 3.0 }.resolve(spd, &data.mean_profile(0..data.len()))?;
    let functionals = [
        FunctionalSpec::Sup,
        FunctionalSpec::Inf,
        FunctionalSpec::Integral { t1: 0.0, t2: 48.0 },
        seasonal,
        auto,
        FunctionalSpec::WeightedPower { weights: vec![1.0 / 48.0; 48], p: 2.0 },
        FunctionalSpec::ThresholdCrossing { start: 24, end: 48, rho: 65.0 },
    ];

    print!("{:>5} {:>3}", "day", "mon");
    for f in &functionals {
        print!(" {:>18}", f.name());
    }
    println!();
    for day in [1, 100, 200, 300] {
        let curve = &data.curves()[day - 1];
        print!("{:>5} {:>3}", curve.day_index(), curve.month());
        for f in &functionals {
            match eval_functional(f, curve)?.value() {
                Some(v) => print!(" {v:>18.3}"),
                None => print!(" {:>18}", "none"),
            }
        }
        println!();
    }
    Ok(())
}

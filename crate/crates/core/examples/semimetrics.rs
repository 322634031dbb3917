//! The two semi-metrics on shifted and rescaled versions of one curve.

use fmode::{semimetric, Curve, SemiMetric};

fn main() -> fmode::Result<()> {
    let base: Vec<f64> = (0..48).map(|t| 50.0 + 15.0 * (t as f64 / 48.0 * std::f64::consts::TAU).sin()).collect();
    let x = Curve::from_samples(base.clone())?;
    let variants = [
        ("level +10", base.iter().map(|v| v + 10.0).collect::<Vec<_>>()),
        ("trend 0.2/step", base.iter().enumerate().map(|(t, v)| v + 0.2 * t as f64).collect()),
        ("scaled x1.1", base.iter().map(|v| v * 1.1).collect()),
        ("shifted 2 steps", (0..48).map(|t| base[(t + 2) % 48]).collect()),
    ];
    println!("{:<16} {:>10} {:>10}", "variant", "l2", "deriv2");
    for (name, z) in variants {
        let y = Curve::from_samples(z)?;
        println!(
            "{name:<16} {:>10.4} {:>10.4}",
            semimetric(SemiMetric::L2, &x, &y)?,
            semimetric(SemiMetric::Deriv2L2, &x, &y)?
        );
    }
    Ok(())
}

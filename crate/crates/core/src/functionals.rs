//! Scalar functionals of a daily curve: peak, trough, energy over a window,
//! weighted power integrals and first threshold crossings.
//!
//! Curves live on the grid `t = 0, 1, ..., T - 1` with unit spacing.
//! Integrals use the trapezoidal rule on the piecewise-linear interpolant of
//! the samples; on `[T - 1, T]` the last sample is held so that a window may
//! extend to the end of the day.

use serde::{Deserialize, Serialize};

use crate::curves::Curve;
use crate::error::{Error, Result};

/// A functional of a daily curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    /// Daily maximum (peak load).
    Sup,
    /// Daily minimum.
    Inf,
    /// Integral over `[t1, t2]` in grid units (energy over a window).
    Integral { t1: f64, t2: f64 },
    /// Integral whose window depends on the season of the curve's month.
    SeasonalIntegral { winter: (f64, f64), summer: (f64, f64) },
    /// `∫ W(t) Z(t)^p dt` over the sample grid.
    WeightedPower { weights: Vec<f64>, p: f64 },
    /// First grid index in `[start, end)` with `Z(t) >= rho`.
    ThresholdCrossing { start: usize, end: usize, rho: f64 },
}

/// Result of evaluating a functional. Only threshold crossings can be absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalValue {
    Value(f64),
    NoCrossing,
}

impl FunctionalValue {
    pub fn value(self) -> Option<f64> {
        match self {
            FunctionalValue::Value(v) => Some(v),
            FunctionalValue::NoCrossing => None,
        }
    }
}

/// Months treated as summer by [`FunctionalSpec::SeasonalIntegral`].
pub const SUMMER_MONTHS: std::ops::RangeInclusive<u8> = 4..=9;

impl FunctionalSpec {
    /// Check the parameters against a grid of `samples_per_day` points.
    pub fn validate(&self, samples_per_day: usize) -> Result<()> {
        let day = samples_per_day as f64;
        let window = |name: &str, t1: f64, t2: f64| {
            if !(t1.is_finite() && t2.is_finite() && 0.0 <= t1 && t1 < t2 && t2 <= day) {
                Err(Error::InvalidFunctional(format!(
                    "{name} window [{t1}, {t2}] must satisfy 0 <= t1 < t2 <= {samples_per_day}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            FunctionalSpec::Sup | FunctionalSpec::Inf => Ok(()),
            FunctionalSpec::Integral { t1, t2 } => window("integral", *t1, *t2),
            FunctionalSpec::SeasonalIntegral { winter, summer } => {
                window("winter", winter.0, winter.1)?;
                window("summer", summer.0, summer.1)
            }
            FunctionalSpec::WeightedPower { weights, p } => {
                if weights.len() != samples_per_day {
                    return Err(Error::InvalidFunctional(format!(
                        "{} weights for {samples_per_day} samples",
                        weights.len()
                    )));
                }
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidFunctional(format!("power p={p} must be positive")));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidFunctional("non-finite weight".into()));
                }
                Ok(())
            }
            FunctionalSpec::ThresholdCrossing { start, end, rho } => {
                if start >= end || *end > samples_per_day {
                    return Err(Error::InvalidFunctional(format!(
                        "crossing set [{start}, {end}) must be non-empty within 0..{samples_per_day}"
                    )));
                }
                if !rho.is_finite() {
                    return Err(Error::InvalidFunctional("non-finite threshold".into()));
                }
                Ok(())
            }
        }
    }

    /// Short name used in file names and reports.
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalSpec::Sup => "sup",
            FunctionalSpec::Inf => "inf",
            FunctionalSpec::Integral { .. } | FunctionalSpec::SeasonalIntegral { .. } => "integral",
            FunctionalSpec::WeightedPower { .. } => "wpower",
            FunctionalSpec::ThresholdCrossing { .. } => "crossing",
        }
    }
}

/// Evaluate `spec` on `curve`.
pub fn eval_functional(spec: &FunctionalSpec, curve: &Curve) -> Result<FunctionalValue> {
    spec.validate(curve.len())?;
    let z = curve.samples();
    let value = match spec {
        FunctionalSpec::Sup => z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        FunctionalSpec::Inf => z.iter().copied().fold(f64::INFINITY, f64::min),
        FunctionalSpec::Integral { t1, t2 } => window_integral(z, *t1, *t2),
        FunctionalSpec::SeasonalIntegral { winter, summer } => {
            let (t1, t2) = if SUMMER_MONTHS.contains(&curve.month()) {
                *summer
            } else {
                *winter
            };
            window_integral(z, t1, t2)
        }
        FunctionalSpec::WeightedPower { weights, p } => {
            let integer_power = p.fract() == 0.0;
            let mut g = Vec::with_capacity(z.len());
            for (w, &v) in weights.iter().zip(z) {
                let pow = if integer_power && *p <= i32::MAX as f64 {
                    v.powi(*p as i32)
                } else if v < 0.0 {
                    return Err(Error::UndefinedPower { value: v, p: *p });
                } else {
                    v.powf(*p)
                };
                g.push(w * pow);
            }
            g.windows(2).map(|s| trapezoid(s[0], s[1], 1.0)).sum()
        }
        FunctionalSpec::ThresholdCrossing { start, end, rho } => {
            return Ok(z[*start..*end]
                .iter()
                .position(|&v| v >= *rho)
                .map(|i| FunctionalValue::Value((start + i) as f64))
                .unwrap_or(FunctionalValue::NoCrossing));
        }
    };
    Ok(FunctionalValue::Value(value))
}

fn trapezoid(a: f64, b: f64, width: f64) -> f64 {
    0.5 * (a + b) * width
}

/// Piecewise-linear interpolant with the last sample held on `[T-1, T]`.
fn interpolate(z: &[f64], t: f64) -> f64 {
    let last = z.len() - 1;
    if t >= last as f64 {
        return z[last];
    }
    let j = t.floor() as usize;
    let frac = t - j as f64;
    if frac == 0.0 {
        z[j]
    } else {
        z[j] + frac * (z[j + 1] - z[j])
    }
}

fn window_integral(z: &[f64], t1: f64, t2: f64) -> f64 {
    let mut total = 0.0;
    let mut j = t1.floor() as usize;
    while j < z.len() && (j as f64) < t2 {
        let lo = (j as f64).max(t1);
        let hi = ((j + 1) as f64).min(t2);
        if hi > lo {
            total += trapezoid(interpolate(z, lo), interpolate(z, hi), hi - lo);
        }
        j += 1;
    }
    total
}

/// How the energy window is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EnergyWindow {
    /// 18:00-21:00 in winter months, 12:00-15:00 in summer months.
    Seasonal,
    /// A window of `hours` centred on the argmax of a mean daily profile.
    Auto { hours: f64 },
}

impl EnergyWindow {
    /// Build the integral functional for a grid of `samples_per_day` points.
    /// `mean_profile` is only consulted in auto mode.
    pub fn resolve(&self, samples_per_day: usize, mean_profile: &[f64]) -> Result<FunctionalSpec> {
        let per_hour = samples_per_day as f64 / 24.0;
        let spec = match *self {
            EnergyWindow::Seasonal => FunctionalSpec::SeasonalIntegral {
                winter: (18.0 * per_hour, 21.0 * per_hour),
                summer: (12.0 * per_hour, 15.0 * per_hour),
            },
            EnergyWindow::Auto { hours } => {
                if mean_profile.len() != samples_per_day {
                    return Err(Error::InvalidFunctional(format!(
                        "mean profile has {} samples, expected {samples_per_day}",
                        mean_profile.len()
                    )));
                }
                let width = (hours * per_hour).min(samples_per_day as f64);
                let peak = mean_profile
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                        if v > best.1 {
                            (i, v)
                        } else {
                            best
                        }
                    })
                    .0 as f64;
                let t1 = (peak - width / 2.0).clamp(0.0, samples_per_day as f64 - width);
                FunctionalSpec::Integral { t1, t2: t1 + width }
            }
        };
        spec.validate(samples_per_day)?;
        Ok(spec)
    }
}

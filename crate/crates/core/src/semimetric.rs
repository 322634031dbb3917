//! Semi-metrics between curves on a common unit-step grid.

use serde::{Deserialize, Serialize};

use crate::curves::Curve;
use crate::error::{Error, Result};

/// Distance between two curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiMetric {
    /// `L2` norm of the difference (trapezoidal rule).
    L2,
    /// `L2` norm of the difference of second derivatives. Blind to affine terms.
    #[default]
    #[serde(rename = "deriv2")]
    Deriv2L2,
}

impl SemiMetric {
    /// Map a curve to the representation in which the distance is plain `L2`.
    pub fn transform(&self, samples: &[f64]) -> Result<Vec<f64>> {
        match self {
            SemiMetric::L2 => Ok(samples.to_vec()),
            SemiMetric::Deriv2L2 => second_difference(samples),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "l2" => Some(SemiMetric::L2),
            "deriv2" => Some(SemiMetric::Deriv2L2),
            _ => None,
        }
    }
}

/// Second differences with unit step: central in the interior, the nearest
/// three-point stencil at each end. Output has the input's length.
pub fn second_difference(z: &[f64]) -> Result<Vec<f64>> {
    let n = z.len();
    if n < 5 {
        return Err(Error::GridTooShort(n));
    }
    let stencil = |j: usize| z[j - 1] - 2.0 * z[j] + z[j + 1];
    let mut out = Vec::with_capacity(n);
    out.push(stencil(1));
    out.extend((1..n - 1).map(stencil));
    out.push(stencil(n - 2));
    Ok(out)
}

/// `sqrt(∫ (a - b)^2)` by the trapezoidal rule on a unit grid.
pub fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    let n = sq.len();
    if n < 2 {
        return sq.first().copied().unwrap_or(0.0).sqrt();
    }
    let interior: f64 = sq[1..n - 1].iter().sum();
    (interior + 0.5 * (sq[0] + sq[n - 1])).sqrt()
}

/// Semi-metric between two curves.
pub fn semimetric(spec: SemiMetric, a: &Curve, b: &Curve) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let ta = spec.transform(a.samples())?;
    let tb = spec.transform(b.samples())?;
    Ok(l2_distance(&ta, &tb))
}

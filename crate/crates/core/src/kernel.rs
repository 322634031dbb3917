//! Covariate kernel `K` (supported on `[0, 1]`) and response kernel `H`
//! with its integrated form.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

/// Quadratic kernel `1.5 (1 - u^2)` on `[0, 1]`.
pub fn kernel_k(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        1.5 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Symmetric quadratic kernel `0.75 (1 - u^2)` on `[-1, 1]`.
pub fn kernel_h(u: f64) -> f64 {
    if (-1.0..=1.0).contains(&u) {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Antiderivative of [`kernel_h`], 0 below -1 and 1 above 1.
pub fn kernel_h_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        0.5 + 0.75 * u - 0.25 * u * u * u
    }
}

/// Kernel applied to the scaled covariate distance `d(x, X_i) / h`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateKernel {
    /// `1.5 (1 - u^2)` on `[0, 1]`; vanishes at the boundary.
    #[default]
    Quadratic,
    /// `(1.5 (1 - u^2) + eps) / (1 + eps)` on `[0, 1]`, strictly positive at `u = 1`.
    QuadraticPositiveBoundary { eps: f64 },
}

impl CovariateKernel {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            CovariateKernel::Quadratic => kernel_k(u),
            CovariateKernel::QuadraticPositiveBoundary { eps } => {
                if (0.0..=1.0).contains(&u) {
                    (1.5 * (1.0 - u * u) + eps) / (1.0 + eps)
                } else {
                    0.0
                }
            }
        }
    }

    /// Value at `u = 0`, the largest weight any observation can get.
    pub fn max_value(&self) -> f64 {
        self.eval(0.0)
    }
}

const GAUSS_CUT: f64 = 3.0;

/// Kernel smoothing the response axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKernel {
    /// `0.75 (1 - u^2)` on `[-1, 1]`: unit mass and zero mean.
    #[default]
    SymQuadratic,
    /// The one-sided `1.5 (1 - u^2)` on `[0, 1]`, the covariate kernel reused
    /// on the response axis. Unit mass but nonzero mean, so the density
    /// estimate is shifted.
    #[serde(rename = "paper_literal", alias = "one_sided")]
    OneSided,
    /// Standard normal truncated to `[-3, 3]` and renormalized.
    TruncatedGaussian,
}

impl ResponseKernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ResponseKernel::SymQuadratic => kernel_h(u),
            ResponseKernel::OneSided => kernel_k(u),
            ResponseKernel::TruncatedGaussian => {
                if u.abs() <= GAUSS_CUT {
                    (-0.5 * u * u).exp() / (std::f64::consts::TAU.sqrt() * gauss_mass())
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        match self {
            ResponseKernel::SymQuadratic => kernel_h_cdf(u),
            ResponseKernel::OneSided => {
                if u <= 0.0 {
                    0.0
                } else if u >= 1.0 {
                    1.0
                } else {
                    1.5 * u - 0.5 * u * u * u
                }
            }
            ResponseKernel::TruncatedGaussian => {
                if u <= -GAUSS_CUT {
                    0.0
                } else if u >= GAUSS_CUT {
                    1.0
                } else {
                    (std_normal_cdf(u) - std_normal_cdf(-GAUSS_CUT)) / gauss_mass()
                }
            }
        }
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ResponseKernel::SymQuadratic => (-1.0, 1.0),
            ResponseKernel::OneSided => (0.0, 1.0),
            ResponseKernel::TruncatedGaussian => (-GAUSS_CUT, GAUSS_CUT),
        }
    }
}

fn std_normal_cdf(u: f64) -> f64 {
    0.5 * (1.0 + erf(u / std::f64::consts::SQRT_2))
}

fn gauss_mass() -> f64 {
    erf(GAUSS_CUT / std::f64::consts::SQRT_2)
}

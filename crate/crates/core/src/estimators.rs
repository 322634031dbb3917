//! Kernel estimators of the conditional law of a scalar response `φ(Z)`
//! given a functional covariate `x`.
//!
//! With `Δ_i(x) = K(d(x, X_i) / h)` the conditional density estimate is
//!
//! ```text
//! g_n(y | x) = Σ Δ_i H((y - φ(Z_i)) / h_H) / (h_H Σ Δ_i)
//! ```
//!
//! which is the ratio `f_n / l_n` with the unobservable normalizer `E[Δ_1]`
//! cancelled. The conditional mode is its argmax over a response grid; the
//! conditional CDF replaces `H` by its antiderivative, and the
//! Nadaraya-Watson mean is the `Δ`-weighted average of the responses.

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, FunctionalDataset};
use crate::error::{Error, Result};
use crate::functionals::{eval_functional, FunctionalSpec};
use crate::kernel::{CovariateKernel, ResponseKernel};
use crate::semimetric::{l2_distance, SemiMetric};

/// Default number of points of the response search grid.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Default padding of the automatic grid, as a fraction of the response range.
pub const DEFAULT_GRID_PAD: f64 = 0.05;

/// Which point predictor to extract from the conditional law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Mode,
    Median,
    Mean,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [Predictor::Mode, Predictor::Median, Predictor::Mean];

    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Mode => "mode",
            Predictor::Median => "median",
            Predictor::Mean => "mean",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "mode" => Some(Predictor::Mode),
            "median" => Some(Predictor::Median),
            "mean" => Some(Predictor::Mean),
            _ => None,
        }
    }
}

impl std::fmt::Display for Predictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Search set for the mode and support of the median bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `[min φ - pad·range, max φ + pad·range]` over the learning responses.
    Auto { points: usize, pad: f64 },
    Fixed { min: f64, max: f64, points: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: DEFAULT_GRID_POINTS,
            pad: DEFAULT_GRID_PAD,
        }
    }
}

/// Uniform grid of response values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseGrid {
    min: f64,
    max: f64,
    points: usize,
}

impl ResponseGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidConfig(format!(
                "response grid needs y_min < y_max, got [{min}, {max}]"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidConfig(format!(
                "response grid needs at least 2 points, got {points}"
            )));
        }
        Ok(Self { min, max, points })
    }

    /// Grid spanning `responses` padded by `pad · range` on each side; a
    /// degenerate range is padded by `fallback_pad` instead.
    pub fn covering(responses: &[f64], pad: f64, points: usize, fallback_pad: f64) -> Result<Self> {
        let (lo, hi) = min_max(responses.iter().copied())
            .ok_or_else(|| Error::InvalidConfig("no responses to span".into()))?;
        let range = hi - lo;
        if range > 0.0 {
            return Self::new(lo - pad * range, hi + pad * range, points);
        }
        // Single response value: put it on a grid node, `margin` below it.
        let below = ((points - 1) / 2).max(1);
        let step = fallback_pad / below as f64;
        Self::new(lo - below as f64 * step, lo + (points - 1 - below) as f64 * step, points)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.value(i)).collect()
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    it.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

/// Kernels, semi-metric, bandwidths and response grid of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub semimetric: SemiMetric,
    pub covariate_kernel: CovariateKernel,
    pub response_kernel: ResponseKernel,
    /// Covariate bandwidth `h_K`; also `h_H` unless overridden.
    pub bandwidth: f64,
    /// Separate response bandwidth `h_H`.
    pub response_bandwidth: Option<f64>,
    /// Measure `h_H` in units of the learning-response standard deviation.
    pub standardize_responses: bool,
    pub grid: GridSpec,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            semimetric: SemiMetric::Deriv2L2,
            covariate_kernel: CovariateKernel::Quadratic,
            response_kernel: ResponseKernel::SymQuadratic,
            bandwidth: 1.0,
            response_bandwidth: None,
            standardize_responses: false,
            grid: GridSpec::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn with_bandwidth(mut self, h: f64) -> Self {
        self.bandwidth = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!("bandwidth {} must be positive", self.bandwidth)));
        }
        if let Some(hh) = self.response_bandwidth {
            if !(hh > 0.0 && hh.is_finite()) {
                return Err(Error::InvalidConfig(format!("response bandwidth {hh} must be positive")));
            }
        }
        if let CovariateKernel::QuadraticPositiveBoundary { eps } = self.covariate_kernel {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidConfig(format!("boundary eps {eps} must be positive")));
            }
        }
        match self.grid {
            GridSpec::Auto { points, pad } => {
                if points < 2 {
                    return Err(Error::InvalidConfig(format!("grid points {points} < 2")));
                }
                if !(pad >= 0.0 && pad.is_finite()) {
                    return Err(Error::InvalidConfig(format!("grid pad {pad} must be >= 0")));
                }
            }
            GridSpec::Fixed { min, max, points } => {
                ResponseGrid::new(min, max, points)?;
            }
        }
        Ok(())
    }
}

/// Learning pairs `(X_i, φ(Z_i))`, with covariates stored in the
/// representation used by the semi-metric.
#[derive(Debug, Clone)]
pub struct LearningSet {
    metric: SemiMetric,
    covariates: Vec<Vec<f64>>,
    responses: Vec<f64>,
    days: Vec<usize>,
}

impl LearningSet {
    /// Pairs from `covariate` curves and their scalar responses.
    pub fn from_pairs(metric: SemiMetric, covariates: &[Curve], responses: Vec<f64>) -> Result<Self> {
        if covariates.len() != responses.len() {
            return Err(Error::InvalidConfig(format!(
                "{} covariates for {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        if covariates.is_empty() {
            return Err(Error::InvalidConfig("empty learning set".into()));
        }
        let len = covariates[0].len();
        let transformed = covariates
            .iter()
            .map(|c| {
                if c.len() != len {
                    Err(Error::LengthMismatch { left: len, right: c.len() })
                } else {
                    metric.transform(c.samples())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(r) = responses.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite response {r}")));
        }
        Ok(Self {
            metric,
            covariates: transformed,
            responses,
            days: covariates.iter().map(|c| c.day_index() + 1).collect(),
        })
    }

    /// Pairs of `data` whose response day lies in `response_days` (1-based,
    /// inclusive range). Days whose functional is absent are dropped.
    pub fn from_dataset(
        data: &FunctionalDataset,
        response_days: std::ops::RangeInclusive<usize>,
        phi: &FunctionalSpec,
        metric: SemiMetric,
    ) -> Result<Self> {
        let mut covariates = Vec::new();
        let mut responses = Vec::new();
        let mut days = Vec::new();
        for (x, z) in data.pairs() {
            if !response_days.contains(&z.day_index()) {
                continue;
            }
            if let Some(v) = eval_functional(phi, z)?.value() {
                covariates.push(metric.transform(x.samples())?);
                responses.push(v);
                days.push(z.day_index());
            }
        }
        if responses.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "no learning pairs with response day in {response_days:?}"
            )));
        }
        Ok(Self {
            metric,
            covariates,
            responses,
            days,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn metric(&self) -> SemiMetric {
        self.metric
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    /// Day index of each response.
    pub fn days(&self) -> &[usize] {
        &self.days
    }

    /// Distances from `x` to every learning covariate.
    pub fn distances(&self, x: &Curve) -> Result<Vec<f64>> {
        let len = self.covariates[0].len();
        if x.len() != len {
            return Err(Error::LengthMismatch { left: x.len(), right: len });
        }
        let tx = self.metric.transform(x.samples())?;
        Ok(self.covariates.iter().map(|c| l2_distance(&tx, c)).collect())
    }

    /// Distance between learning covariates `i` and `j`.
    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        l2_distance(&self.covariates[i], &self.covariates[j])
    }

    /// Full symmetric distance matrix, row-major.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        use rayon::prelude::*;
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { self.pair_distance(i, j) }).collect())
            .collect()
    }

    fn check_metric(&self, cfg: &EstimatorConfig) -> Result<()> {
        if cfg.semimetric != self.metric {
            return Err(Error::InvalidConfig(format!(
                "learning set built for {:?}, config asks for {:?}",
                self.metric, cfg.semimetric
            )));
        }
        Ok(())
    }
}

/// Sample standard deviation (n - 1); 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// `h_H` for a learning sample with the given responses.
pub fn response_bandwidth(cfg: &EstimatorConfig, responses: &[f64]) -> f64 {
    let base = cfg.response_bandwidth.unwrap_or(cfg.bandwidth);
    if cfg.standardize_responses {
        let sd = sample_sd(responses);
        if sd > 0.0 {
            return base * sd;
        }
    }
    base
}

/// The response grid for a learning sample.
pub fn response_grid(cfg: &EstimatorConfig, responses: &[f64], h_response: f64) -> Result<ResponseGrid> {
    match cfg.grid {
        GridSpec::Auto { points, pad } => ResponseGrid::covering(responses, pad, points, h_response),
        GridSpec::Fixed { min, max, points } => ResponseGrid::new(min, max, points),
    }
}

/// Covariate kernel weights `Δ_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub delta: Vec<f64>,
}

impl WeightVector {
    pub fn from_distances(distances: &[f64], h: f64, kernel: CovariateKernel) -> Self {
        Self {
            delta: distances.iter().map(|d| kernel.eval(d / h)).collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.delta.iter().sum()
    }
}

/// The conditional law estimate at one query: weights, responses, `h_H`.
#[derive(Debug, Clone)]
pub struct ConditionalLaw<'a> {
    weights: Vec<f64>,
    responses: &'a [f64],
    h_response: f64,
    kernel: ResponseKernel,
    total: f64,
}

impl<'a> ConditionalLaw<'a> {
    /// `h` is only used to report a zero neighbourhood.
    pub fn new(
        weights: Vec<f64>,
        responses: &'a [f64],
        h_response: f64,
        kernel: ResponseKernel,
        h: f64,
    ) -> Result<Self> {
        debug_assert_eq!(weights.len(), responses.len());
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroNeighborhood { h });
        }
        Ok(Self {
            weights,
            responses,
            h_response,
            kernel,
            total,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn h_response(&self) -> f64 {
        self.h_response
    }

    pub fn density(&self, y: f64) -> f64 {
        let mut num = 0.0;
        for (w, r) in self.weights.iter().zip(self.responses) {
            num += w * self.kernel.eval((y - r) / self.h_response);
        }
        num / (self.h_response * self.total)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let mut num = 0.0;
        for (w, r) in self.weights.iter().zip(self.responses) {
            num += w * self.kernel.cdf((y - r) / self.h_response);
        }
        (num / self.total).clamp(0.0, 1.0)
    }

    /// Nadaraya-Watson estimate of the conditional mean.
    pub fn mean(&self) -> f64 {
        let mut num = 0.0;
        for (w, r) in self.weights.iter().zip(self.responses) {
            num += w * r;
        }
        num / self.total
    }

    /// Density at every grid point. Each point receives contributions only
    /// from observations whose kernel support covers it, in observation
    /// order, so the values agree bit for bit with [`Self::density`].
    pub fn density_on_grid(&self, grid: &ResponseGrid) -> Vec<f64> {
        let n = grid.len();
        let mut acc = vec![0.0; n];
        let (lo, hi) = self.kernel.support();
        let step = grid.step();
        for (w, r) in self.weights.iter().zip(self.responses) {
            if *w == 0.0 {
                continue;
            }
            let first = ((r + lo * self.h_response - grid.min()) / step).floor() - 1.0;
            let last = ((r + hi * self.h_response - grid.min()) / step).ceil() + 1.0;
            if last < 0.0 || first > (n - 1) as f64 {
                continue;
            }
            let first = first.max(0.0) as usize;
            let last = (last as usize).min(n - 1);
            for (j, a) in acc.iter_mut().enumerate().take(last + 1).skip(first) {
                *a += w * self.kernel.eval((grid.value(j) - r) / self.h_response);
            }
        }
        let scale = self.h_response * self.total;
        acc.iter_mut().for_each(|a| *a /= scale);
        acc
    }

    /// Grid argmax of the density; ties go to the smallest `y`.
    pub fn mode(&self, grid: &ResponseGrid) -> Result<(f64, f64)> {
        let values = self.density_on_grid(grid);
        let (best, value) = argmax_first(&values);
        if value <= 0.0 {
            return Err(Error::DegenerateDensity);
        }
        Ok((grid.value(best), value))
    }

    /// Smallest grid point with CDF ≥ 1/2, refined by bisection against the
    /// previous grid point.
    pub fn median(&self, grid: &ResponseGrid) -> f64 {
        let n = grid.len();
        // CDF is nondecreasing along the grid, so binary search the first index >= 0.5.
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cdf(grid.value(mid)) >= 0.5 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo == 0 {
            return grid.min();
        }
        if lo == n {
            return grid.max();
        }
        let tol = 1e-8 * (grid.max() - grid.min());
        let (mut a, mut b) = (grid.value(lo - 1), grid.value(lo));
        while b - a > tol {
            let m = 0.5 * (a + b);
            if self.cdf(m) >= 0.5 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    pub fn predict(&self, predictor: Predictor, grid: &ResponseGrid) -> Result<f64> {
        match predictor {
            Predictor::Mode => self.mode(grid).map(|m| m.0),
            Predictor::Median => Ok(self.median(grid)),
            Predictor::Mean => Ok(self.mean()),
        }
    }
}

/// Index and value of the first maximum.
pub fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (j, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = j;
        }
    }
    (best, values[best])
}

struct Prepared<'a> {
    law: ConditionalLaw<'a>,
    grid: ResponseGrid,
}

fn prepare<'a>(x: &Curve, learn: &'a LearningSet, cfg: &EstimatorConfig) -> Result<Prepared<'a>> {
    cfg.validate()?;
    learn.check_metric(cfg)?;
    let distances = learn.distances(x)?;
    let w = WeightVector::from_distances(&distances, cfg.bandwidth, cfg.covariate_kernel);
    let h_response = response_bandwidth(cfg, &learn.responses);
    let grid = response_grid(cfg, &learn.responses, h_response)?;
    let law = ConditionalLaw::new(w.delta, &learn.responses, h_response, cfg.response_kernel, cfg.bandwidth)?;
    Ok(Prepared { law, grid })
}

/// `Δ_i(x) = K(d(x, X_i) / h)` for every learning covariate.
pub fn weights(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<WeightVector> {
    cfg.validate()?;
    learn.check_metric(cfg)?;
    let distances = learn.distances(x)?;
    Ok(WeightVector::from_distances(&distances, cfg.bandwidth, cfg.covariate_kernel))
}

/// Conditional density estimate `g_n(y | x)`.
pub fn cond_density(x: &Curve, y: f64, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(prepare(x, learn, cfg)?.law.density(y))
}

/// Conditional mode over the response grid, with the density there.
pub fn cond_mode(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<(f64, f64)> {
    let p = prepare(x, learn, cfg)?;
    p.law.mode(&p.grid)
}

pub fn cond_cdf(x: &Curve, y: f64, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(prepare(x, learn, cfg)?.law.cdf(y))
}

pub fn cond_median(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<f64> {
    let p = prepare(x, learn, cfg)?;
    Ok(p.law.median(&p.grid))
}

/// Nadaraya-Watson regression `Σ Δ_i φ(Z_i) / Σ Δ_i`.
pub fn nw_regression(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(prepare(x, learn, cfg)?.law.mean())
}

/// One of the three point predictors.
pub fn predict(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig, predictor: Predictor) -> Result<f64> {
    let p = prepare(x, learn, cfg)?;
    p.law.predict(predictor, &p.grid)
}

/// Density estimate tabulated on the response grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Trapezoidal integral of `values`.
    pub mass_check: f64,
}

pub fn density_curve(x: &Curve, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<DensityCurve> {
    let p = prepare(x, learn, cfg)?;
    let values = p.law.density_on_grid(&p.grid);
    let step = p.grid.step();
    let mass_check = values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
    Ok(DensityCurve {
        grid: p.grid.values(),
        values,
        mass_check,
    })
}

/// The estimator's numerator and denominator with the normalizer
/// `E[Δ_1(x)]` set to 1: `f = Σ Δ_i H / (n h_H)`, `l = Σ Δ_i / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnnormalizedParts {
    pub joint: f64,
    pub marginal: f64,
}

pub fn unnormalized_parts(x: &Curve, y: f64, learn: &LearningSet, cfg: &EstimatorConfig) -> Result<UnnormalizedParts> {
    let w = weights(x, learn, cfg)?;
    let h_response = response_bandwidth(cfg, &learn.responses);
    let n = learn.len() as f64;
    let mut joint = 0.0;
    for (d, r) in w.delta.iter().zip(&learn.responses) {
        joint += d * cfg.response_kernel.eval((y - r) / h_response);
    }
    Ok(UnnormalizedParts {
        joint: joint / (n * h_response),
        marginal: w.total() / n,
    })
}

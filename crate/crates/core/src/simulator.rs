//! Synthetic stationary functional processes with known conditional laws,
//! the bias/variance decomposition identity, and a convergence experiment.
//!
//! Day `i` of the simulated series is `(1 + A_i) s(t) + ε_{i,t}` where `s` is
//! a fixed daily profile and the amplitude follows the AR(1) recursion
//! `A_i = ρ A_{i-1} + e_i`. Given the previous day's amplitude `a`, the peak
//! and the window energy of day `i` are affine in `e_i`, so their
//! conditional density, mode, median and mean are available in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::curves::{slice_series, Curve, RawSeries, DEFAULT_START};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, LearningSet, Predictor};
use crate::functionals::{eval_functional, FunctionalSpec};
use crate::selection::{predict_with_fallback, select_k_cv_with_matrix, CvConfig, Neighbors, Pool};

/// Burn-in steps used to reach stationarity when no closed-form law exists.
const BURN_IN: usize = 1000;
/// Grid size of the numeric mode search for mixtures.
const MODE_GRID: usize = 100_000;

/// Law of the AR innovations `e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseLaw {
    /// `N(0, innovation_sd^2)`.
    Gaussian,
    /// Two-component normal location mixture; `weight` is the first
    /// component's probability. `innovation_sd` is not used.
    SkewMix {
        weight: f64,
        locations: (f64, f64),
        sds: (f64, f64),
    },
}

/// Daily profile `s(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// A level with a morning and a larger evening bump.
    TwoPeak { level: f64 },
    Custom { values: Vec<f64> },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::TwoPeak { level: 50.0 }
    }
}

impl Profile {
    pub fn samples(&self, samples_per_day: usize) -> Vec<f64> {
        match self {
            Profile::TwoPeak { level } => (0..samples_per_day)
                .map(|j| {
                    let hour = 24.0 * j as f64 / samples_per_day as f64;
                    let bump = |centre: f64, width: f64| (-0.5 * ((hour - centre) / width).powi(2)).exp();
                    level * (1.0 + 0.25 * bump(9.0, 2.0) + 0.45 * bump(19.0, 1.5) - 0.2 * bump(3.5, 2.5))
                })
                .collect(),
            Profile::Custom { values } => values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_days: usize,
    pub samples_per_day: usize,
    pub profile: Profile,
    pub ar_coeff: f64,
    pub innovation_sd: f64,
    pub obs_noise_sd: f64,
    pub noise_law: NoiseLaw,
    /// Start amplitude; `None` draws it from the stationary law.
    pub initial_amplitude: Option<f64>,
    pub seed: u64,
    pub start_label: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_days: 1461,
            samples_per_day: 48,
            profile: Profile::default(),
            ar_coeff: 0.8,
            innovation_sd: 0.05,
            obs_noise_sd: 0.0,
            noise_law: NoiseLaw::Gaussian,
            initial_amplitude: None,
            seed: 1,
            start_label: DEFAULT_START.to_string(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_days < 2 {
            problems.push(format!("n_days {} < 2", self.n_days));
        }
        if self.samples_per_day < 2 {
            problems.push(format!("samples_per_day {} < 2", self.samples_per_day));
        }
        if let Profile::Custom { values } = &self.profile {
            if values.len() != self.samples_per_day || values.iter().any(|v| !v.is_finite()) {
                problems.push("custom profile must have samples_per_day finite values".into());
            }
        }
        if self.ar_coeff.is_nan() || self.ar_coeff.abs() >= 1.0 {
            problems.push(format!("ar_coeff {} outside (-1, 1)", self.ar_coeff));
        }
        if !(self.innovation_sd >= 0.0 && self.innovation_sd.is_finite()) {
            problems.push(format!("innovation_sd {} must be >= 0", self.innovation_sd));
        }
        if !(self.obs_noise_sd >= 0.0 && self.obs_noise_sd.is_finite()) {
            problems.push(format!("obs_noise_sd {} must be >= 0", self.obs_noise_sd));
        }
        if let NoiseLaw::SkewMix { weight, sds, locations } = self.noise_law {
            if !(0.0..=1.0).contains(&weight) {
                problems.push(format!("mixture weight {weight} outside [0, 1]"));
            }
            if !(sds.0 >= 0.0 && sds.1 >= 0.0 && sds.0.is_finite() && sds.1.is_finite()) {
                problems.push("mixture sds must be >= 0".into());
            }
            if !(locations.0.is_finite() && locations.1.is_finite()) {
                problems.push("mixture locations must be finite".into());
            }
        }
        if let Some(a) = self.initial_amplitude {
            if !a.is_finite() {
                problems.push("initial_amplitude must be finite".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSimConfig(problems.join("; ")))
        }
    }

    /// Innovation law as weighted normal components `(weight, mean, sd)`.
    pub fn innovation_components(&self) -> Vec<(f64, f64, f64)> {
        match self.noise_law {
            NoiseLaw::Gaussian => vec![(1.0, 0.0, self.innovation_sd)],
            NoiseLaw::SkewMix { weight, locations, sds } => {
                vec![(weight, locations.0, sds.0), (1.0 - weight, locations.1, sds.1)]
            }
        }
    }

    fn draw_innovation(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        match self.noise_law {
            NoiseLaw::Gaussian => self.innovation_sd * z,
            NoiseLaw::SkewMix { weight, locations, sds } => {
                let u: f64 = rng.random();
                if u < weight {
                    locations.0 + sds.0 * z
                } else {
                    locations.1 + sds.1 * z
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: RawSeries,
    /// `A_1, ..., A_n`, one per day.
    pub amplitudes: Vec<f64>,
    /// `A_0`, the amplitude preceding the first day.
    pub initial_amplitude: f64,
}

/// Draw a series. The same seed always yields the same values.
pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rho = cfg.ar_coeff;
    let a0 = match (cfg.initial_amplitude, cfg.noise_law) {
        (Some(a), _) => a,
        (None, NoiseLaw::Gaussian) => {
            let z: f64 = rng.sample(StandardNormal);
            z * cfg.innovation_sd / (1.0 - rho * rho).sqrt()
        }
        (None, NoiseLaw::SkewMix { .. }) => {
            let mean: f64 = cfg.innovation_components().iter().map(|c| c.0 * c.1).sum();
            let mut a = mean / (1.0 - rho);
            for _ in 0..BURN_IN {
                a = rho * a + cfg.draw_innovation(&mut rng);
            }
            a
        }
    };
    let profile = cfg.profile.samples(cfg.samples_per_day);
    let mut values = Vec::with_capacity(cfg.n_days * cfg.samples_per_day);
    let mut amplitudes = Vec::with_capacity(cfg.n_days);
    let mut a = a0;
    for _ in 0..cfg.n_days {
        a = rho * a + cfg.draw_innovation(&mut rng);
        amplitudes.push(a);
        for s in &profile {
            let noise = if cfg.obs_noise_sd > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                cfg.obs_noise_sd * z
            } else {
                0.0
            };
            values.push((1.0 + a) * s + noise);
        }
    }
    Ok(Simulation {
        series: RawSeries::new(values, cfg.start_label.clone(), cfg.samples_per_day)?,
        amplitudes,
        initial_amplitude: a0,
    })
}

/// Noise-free curve of a day with amplitude `a`.
pub fn amplitude_curve(cfg: &SimConfig, a: f64) -> Result<Curve> {
    Curve::from_samples(cfg.profile.samples(cfg.samples_per_day).iter().map(|s| (1.0 + a) * s).collect())
}

fn normal_pdf(y: f64, mean: f64, sd: f64) -> f64 {
    let z = (y - mean) / sd;
    (-0.5 * z * z).exp() / (sd * std::f64::consts::TAU.sqrt())
}

fn normal_cdf(y: f64, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return if y >= mean { 1.0 } else { 0.0 };
    }
    0.5 * (1.0 + erf((y - mean) / (sd * std::f64::consts::SQRT_2)))
}

/// Conditional law of `φ(Z_i)` given `A_{i-1} = a`: a normal mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLaw {
    /// `(weight, mean, sd)` components.
    pub components: Vec<(f64, f64, f64)>,
}

impl OracleLaw {
    pub fn density(&self, y: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.0 > 0.0 && c.2 > 0.0)
            .map(|&(w, m, s)| w * normal_pdf(y, m, s))
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.components.iter().map(|&(w, m, s)| w * normal_cdf(y, m, s)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.0 * c.1).sum()
    }

    /// Interval holding all but a negligible part of the mass.
    pub fn span(&self) -> (f64, f64) {
        let active = self.components.iter().filter(|c| c.0 > 0.0);
        let lo = active.clone().map(|c| c.1 - 10.0 * c.2).fold(f64::INFINITY, f64::min);
        let hi = active.map(|c| c.1 + 10.0 * c.2).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Exact for a single component; otherwise the argmax over a grid of
    /// 10^5 points spanning the support.
    pub fn mode(&self) -> f64 {
        let active: Vec<_> = self.components.iter().filter(|c| c.0 > 0.0).collect();
        if active.len() == 1 || active.iter().all(|c| c.2 == 0.0) {
            return active
                .iter()
                .fold((f64::NAN, f64::NEG_INFINITY), |best, c| if c.0 > best.1 { (c.1, c.0) } else { best })
                .0;
        }
        let (lo, hi) = self.span();
        let step = (hi - lo) / (MODE_GRID - 1) as f64;
        let mut best = (lo, f64::NEG_INFINITY);
        for j in 0..MODE_GRID {
            let y = lo + j as f64 * step;
            let d = self.density(y);
            if d > best.1 {
                best = (y, d);
            }
        }
        best.0
    }

    pub fn median(&self) -> f64 {
        let (mut lo, mut hi) = self.span();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Conditional law of `φ(Z_i)` given the previous amplitude `a`.
///
/// Supported: `Sup` without observation noise (requires `1 + A_i > 0`),
/// and `Integral` with or without observation noise.
pub fn oracle_law(cfg: &SimConfig, a: f64, phi: &FunctionalSpec) -> Result<OracleLaw> {
    cfg.validate()?;
    let profile = cfg.profile.samples(cfg.samples_per_day);
    let level = cfg.ar_coeff * a;
    let comps = cfg.innovation_components();
    match phi {
        FunctionalSpec::Sup => {
            if cfg.obs_noise_sd > 0.0 {
                return Err(Error::UnsupportedOracle("sup with observation noise".into()));
            }
            let peak = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(OracleLaw {
                components: comps
                    .iter()
                    .map(|&(w, m, s)| (w, peak * (1.0 + level + m), peak.abs() * s))
                    .collect(),
            })
        }
        FunctionalSpec::Integral { .. } => {
            let curve = |z: Vec<f64>| -> Result<f64> {
                Ok(eval_functional(phi, &Curve::from_samples(z)?)?.value().expect("integral has a value"))
            };
            let base = curve(profile.clone())?;
            // The integral is linear in the samples: its coefficients give the noise variance.
            let mut noise_var = 0.0;
            if cfg.obs_noise_sd > 0.0 {
                for j in 0..profile.len() {
                    let mut e = vec![0.0; profile.len()];
                    e[j] = 1.0;
                    let c = curve(e)?;
                    noise_var += c * c;
                }
                noise_var *= cfg.obs_noise_sd * cfg.obs_noise_sd;
            }
            Ok(OracleLaw {
                components: comps
                    .iter()
                    .map(|&(w, m, s)| (w, base * (1.0 + level + m), (base * base * s * s + noise_var).sqrt()))
                    .collect(),
            })
        }
        other => Err(Error::UnsupportedOracle(format!("functional {}", other.name()))),
    }
}

/// True conditional mode of `φ(Z_i)` given `A_{i-1} = a`.
pub fn oracle_mode(cfg: &SimConfig, a: f64, phi: &FunctionalSpec) -> Result<f64> {
    Ok(oracle_law(cfg, a, phi)?.mode())
}

/// Terms of `g_n - g = B + (R + Q) / l_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub g_n: f64,
    pub bias: f64,
    pub r: f64,
    pub q: f64,
    /// `(g_n - g) - (B + (R + Q) / l_n)`.
    pub residual: f64,
}

impl Decomposition {
    /// Residual relative to the size of the terms involved; `R` and `Q`
    /// enter through `(R + Q) / l_n = g_n - g - B`.
    pub fn relative_residual(&self, g: f64) -> f64 {
        let scale = self.g_n.abs() + g.abs() + self.bias.abs();
        self.residual.abs() / scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluate the decomposition from its five ingredients: the estimator
/// numerator `f_n` and denominator `l_n`, their conditional expectations
/// `bar_f`, `bar_l`, and the true density value `g`.
pub fn decomposition_residual(f_n: f64, bar_f: f64, l_n: f64, bar_l: f64, g: f64) -> Result<Decomposition> {
    if l_n == 0.0 || bar_l == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let g_n = f_n / l_n;
    let bias = bar_f / bar_l - g;
    let r = -bias * (l_n - bar_l);
    let q = (f_n - bar_f) - g * (l_n - bar_l);
    let residual = (g_n - g) - (bias + (r + q) / l_n);
    Ok(Decomposition {
        g_n,
        bias,
        r,
        q,
        residual,
    })
}

/// Settings of the consistency experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub sim: SimConfig,
    pub phi: FunctionalSpec,
    pub estimator: EstimatorConfig,
    pub predictor: Predictor,
    /// Candidate `k` for every sample size; `None` uses
    /// [`experiment_k_grid`], which grows with `n`.
    pub k_grid: Option<Vec<usize>>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    /// Query amplitudes `a`; `None` spreads 20 over ±1.5 stationary sds.
    pub queries: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub median_err: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Stationary standard deviation of the amplitude.
pub fn stationary_sd(cfg: &SimConfig) -> f64 {
    let comps = cfg.innovation_components();
    let mean: f64 = comps.iter().map(|c| c.0 * c.1).sum();
    let var: f64 = comps.iter().map(|c| c.0 * (c.2 * c.2 + (c.1 - mean).powi(2))).sum();
    (var / (1.0 - cfg.ar_coeff * cfg.ar_coeff)).sqrt()
}

/// Fractions of `n` used as candidate `k` when none are given.
pub const EXPERIMENT_K_FRACTIONS: [f64; 5] = [0.01, 0.02, 0.05, 0.1, 0.2];

/// `k = round(f n)` for each fraction, at least 2 and below `n`, deduplicated.
pub fn experiment_k_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = EXPERIMENT_K_FRACTIONS
        .iter()
        .map(|f| ((f * n as f64).round() as usize).max(2))
        .filter(|&k| k + 1 < n)
        .collect();
    grid.dedup();
    grid
}

fn default_queries(cfg: &SimConfig) -> Vec<f64> {
    let comps = cfg.innovation_components();
    let mean = comps.iter().map(|c| c.0 * c.1).sum::<f64>() / (1.0 - cfg.ar_coeff);
    let sd = stationary_sd(cfg);
    (0..20).map(|j| mean + sd * (-1.5 + 3.0 * j as f64 / 19.0)).collect()
}

/// Mean absolute mode error over the query amplitudes for one fitted sample.
pub fn replication_error(cfg: &ConvergenceConfig, n: usize, replication: usize) -> Result<f64> {
    let sim_cfg = SimConfig {
        n_days: n + 1,
        seed: cfg.sim.seed.wrapping_add(replication as u64),
        ..cfg.sim.clone()
    };
    let sim = simulate(&sim_cfg)?;
    let data = slice_series(&sim.series)?;
    let learn = LearningSet::from_dataset(&data, 2..=data.len(), &cfg.phi, cfg.estimator.semimetric)?;
    let k_grid = cfg.k_grid.clone().unwrap_or_else(|| experiment_k_grid(learn.len()));
    let matrix = learn.distance_matrix();
    let cv = CvConfig::new(cfg.predictor, k_grid);
    let best_k = select_k_cv_with_matrix(&learn, &matrix, &cfg.estimator, &cv)?.best_k;

    let queries = cfg.queries.clone().unwrap_or_else(|| default_queries(&cfg.sim));
    let pool = Pool {
        responses: learn.responses(),
        pool: learn.responses().to_vec(),
    };
    let mut total = 0.0;
    for &a in &queries {
        let x = amplitude_curve(&sim_cfg, a)?;
        let distances = learn.distances(&x)?;
        let neighbors = Neighbors::new(&distances, |_| true, best_k);
        let h = neighbors.knn_bandwidth(best_k)?;
        let (theta, _) = predict_with_fallback(&neighbors, &pool, &cfg.estimator, h, cfg.predictor)?;
        let target = match cfg.predictor {
            Predictor::Mode => oracle_mode(&cfg.sim, a, &cfg.phi)?,
            Predictor::Median => oracle_law(&cfg.sim, a, &cfg.phi)?.median(),
            Predictor::Mean => oracle_law(&cfg.sim, a, &cfg.phi)?.mean(),
        };
        total += (theta - target).abs();
    }
    Ok(total / queries.len() as f64)
}

/// For each sample size: simulate, choose `k` by cross-validation, and
/// report the distribution over replications of the mean absolute error
/// against the true conditional target at the query amplitudes.
/// Replication `r` uses seed `sim.seed + r`.
pub fn convergence_experiment(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRow>> {
    if cfg.n_list.is_empty() || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n_list must be non-empty and increasing".into()));
    }
    if cfg.replications < 10 {
        return Err(Error::InvalidConfig(format!("replications {} < 10", cfg.replications)));
    }
    cfg.sim.validate()?;
    cfg.estimator.validate()?;
    oracle_law(&cfg.sim, 0.0, &cfg.phi)?;
    cfg.n_list
        .iter()
        .map(|&n| {
            let mut errs = (0..cfg.replications)
                .into_par_iter()
                .map(|r| replication_error(cfg, n, r))
                .collect::<Result<Vec<_>>>()?;
            errs.sort_unstable_by(f64::total_cmp);
            Ok(ConvergenceRow {
                n,
                median_err: crate::pipeline::quantile_sorted(&errs, 0.5),
                q25: crate::pipeline::quantile_sorted(&errs, 0.25),
                q75: crate::pipeline::quantile_sorted(&errs, 0.75),
            })
        })
        .collect()
}

/// Write experiment rows as `n,median_err,q25,q75`.
pub fn write_convergence_csv<W: std::io::Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "median_err", "q25", "q75"]).map_err(crate::curves::io_err)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.median_err.to_string(), r.q25.to_string(), r.q75.to_string()])
            .map_err(crate::curves::io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

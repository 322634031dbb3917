//! Run configuration read from TOML, with command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Predictor};
use crate::functionals::{EnergyWindow, FunctionalSpec};
use crate::pipeline::{ForecastConfig, SplitSpec};
use crate::selection::{BandwidthPolicy, CvConfig, CvLoss};
use crate::semimetric::SemiMetric;
use crate::simulator::{ConvergenceConfig, SimConfig};

/// How the covariate bandwidth of a forecast run is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// Local k-NN bandwidth with `k` chosen by leave-one-out on the learning set.
    #[default]
    Cv,
    Fixed,
    Knn,
    GlobalKnn,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthSection {
    pub mode: BandwidthMode,
    pub h: Option<f64>,
    pub k: Option<usize>,
    /// Candidates for `cv`; the default grid when absent.
    pub k_grid: Option<Vec<usize>>,
    pub gap: usize,
    pub loss: CvLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub predictor: Predictor,
    pub k_grid: Option<Vec<usize>>,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            n_list: vec![100, 400, 1600],
            replications: 50,
            predictor: Predictor::Mode,
            k_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Overrides `sim.seed` when set.
    pub seed: Option<u64>,
    pub samples_per_day: usize,
    /// Value column of input CSV files.
    pub column: String,
    pub predictors: Vec<Predictor>,
    pub phi: FunctionalSpec,
    pub split: SplitSpec,
    pub estimator: EstimatorConfig,
    pub bandwidth: BandwidthSection,
    pub sim: SimConfig,
    pub converge: ConvergeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            samples_per_day: 48,
            column: "value".into(),
            predictors: Predictor::ALL.to_vec(),
            phi: FunctionalSpec::Sup,
            split: SplitSpec::FOUR_YEARS,
            estimator: EstimatorConfig::default(),
            bandwidth: BandwidthSection::default(),
            sim: SimConfig::default(),
            converge: ConvergeSection::default(),
        }
    }
}

/// Values given on the command line; each replaces its config counterpart.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub predictor: Option<Predictor>,
    pub phi: Option<String>,
    pub k_grid: Option<Vec<usize>>,
    pub semimetric: Option<SemiMetric>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(vec![e.message().to_string()]))
    }

    /// Read a config file; `None` gives the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Self::from_toml(&text).map_err(|e| match e {
                    Error::Validation(v) => Error::Validation(v.into_iter().map(|m| format!("{}: {m}", p.display())).collect()),
                    other => other,
                })
            }
            None => Ok(Self::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(p) = o.predictor {
            self.predictors = vec![p];
            self.converge.predictor = p;
        }
        if let Some(name) = &o.phi {
            self.phi = self.phi_from_flag(name)?;
        }
        if let Some(grid) = &o.k_grid {
            self.bandwidth.k_grid = Some(grid.clone());
            self.converge.k_grid = Some(grid.clone());
        }
        if let Some(m) = o.semimetric {
            self.estimator.semimetric = m;
        }
        if let Some(seed) = self.seed {
            self.sim.seed = seed;
        }
        Ok(())
    }

    /// Functional named on the command line. Keeps the configured parameters
    /// when the kind already matches.
    fn phi_from_flag(&self, name: &str) -> Result<FunctionalSpec> {
        let spd = self.samples_per_day;
        let same = |kind: &str| self.phi.name() == kind;
        Ok(match name {
            "sup" => FunctionalSpec::Sup,
            "inf" => FunctionalSpec::Inf,
            "integral" if matches!(self.phi, FunctionalSpec::Integral { .. } | FunctionalSpec::SeasonalIntegral { .. }) => {
                self.phi.clone()
            }
            "integral" => EnergyWindow::Seasonal.resolve(spd, &[])?,
            "wpower" if same("weighted_power") => self.phi.clone(),
            "wpower" => FunctionalSpec::WeightedPower { weights: vec![1.0; spd], p: 2.0 },
            "crossing" if same("threshold_crossing") => self.phi.clone(),
            "crossing" => {
                return Err(Error::Validation(vec![
                    "phi: crossing needs a threshold; set phi.kind = \"threshold_crossing\" with rho in the config".into(),
                ]))
            }
            other => return Err(Error::Validation(vec![format!("phi: unknown functional '{other}'")])),
        })
    }

    /// Check every section and report all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut check = |key: &str, r: std::result::Result<(), String>| {
            if let Err(e) = r {
                bad.push(format!("{key}: {e}"));
            }
        };
        if self.samples_per_day < 2 {
            check("samples_per_day", Err(format!("{} < 2", self.samples_per_day)));
        }
        if self.column.is_empty() {
            check("column", Err("empty column name".into()));
        }
        if self.predictors.is_empty() {
            check("predictors", Err("no predictor selected".into()));
        }
        check("phi", self.phi.validate(self.samples_per_day).map_err(|e| e.to_string()));
        check("estimator", self.estimator.validate().map_err(|e| e.to_string()));
        if self.split.n_learn < 2 || self.split.n_test == 0 {
            check("split", Err("need n_learn >= 2 and n_test >= 1".into()));
        }
        let b = &self.bandwidth;
        match b.mode {
            BandwidthMode::Fixed if !b.h.is_some_and(|h| h > 0.0 && h.is_finite()) => {
                check("bandwidth.h", Err("fixed mode needs a positive h".into()));
            }
            BandwidthMode::Knn | BandwidthMode::GlobalKnn if !b.k.is_some_and(|k| k >= 1) => {
                check("bandwidth.k", Err("k-NN mode needs k >= 1".into()));
            }
            _ => {}
        }
        for (key, grid) in [("bandwidth.k_grid", &b.k_grid), ("converge.k_grid", &self.converge.k_grid)] {
            if let Some(g) = grid {
                if g.is_empty() || g.contains(&0) {
                    check(key, Err("k values must be >= 1 and the grid non-empty".into()));
                }
            }
        }
        check("sim", self.sim.validate().map_err(|e| e.to_string()));
        if self.sim.samples_per_day != self.samples_per_day {
            check(
                "sim.samples_per_day",
                Err(format!(
                    "{} differs from samples_per_day {}",
                    self.sim.samples_per_day, self.samples_per_day
                )),
            );
        }
        let c = &self.converge;
        if c.n_list.is_empty() || c.n_list.windows(2).any(|w| w[0] >= w[1]) || c.n_list.contains(&0) {
            check("converge.n_list", Err("must be positive and increasing".into()));
        }
        if c.replications < 10 {
            check("converge.replications", Err(format!("{} < 10", c.replications)));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    /// Cross-validation settings for one predictor.
    pub fn cv_config(&self, predictor: Predictor, n_learn: usize) -> CvConfig {
        let k_grid = self
            .bandwidth
            .k_grid
            .clone()
            .unwrap_or_else(|| crate::selection::default_k_grid(n_learn.saturating_sub(2 * self.bandwidth.gap)));
        CvConfig {
            gap: self.bandwidth.gap,
            loss: self.bandwidth.loss,
            ..CvConfig::new(predictor, k_grid)
        }
    }

    /// Forecast settings once `k` is known; `cv_k` is used in `cv` mode.
    pub fn forecast_config(&self, cv_k: Option<usize>) -> Result<ForecastConfig> {
        let b = &self.bandwidth;
        let policy = match b.mode {
            BandwidthMode::Fixed => BandwidthPolicy::Fixed { h: b.h.unwrap_or(f64::NAN) },
            BandwidthMode::Knn => BandwidthPolicy::Knn { k: b.k.unwrap_or(0) },
            BandwidthMode::GlobalKnn => BandwidthPolicy::GlobalKnn { k: b.k.unwrap_or(0) },
            BandwidthMode::Cv => BandwidthPolicy::Knn {
                k: cv_k.ok_or_else(|| Error::InvalidConfig("cross-validated k not available".into()))?,
            },
        };
        Ok(ForecastConfig {
            estimator: self.estimator,
            bandwidth: policy,
        })
    }

    pub fn convergence_config(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            sim: self.sim.clone(),
            phi: self.phi.clone(),
            estimator: self.estimator,
            predictor: self.converge.predictor,
            k_grid: self.converge.k_grid.clone(),
            n_list: self.converge.n_list.clone(),
            replications: self.converge.replications,
            queries: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            predictors = ["mode", "mean"]
            [phi]
            kind = "integral"
            t1 = 36.0
            t2 = 42.0
            [estimator]
            semimetric = "l2"
            response_kernel = "paper_literal"
            [bandwidth]
            mode = "knn"
            k = 12
            [split]
            n_learn = 300
            n_test = 60
            [sim]
            n_days = 400
            ar_coeff = 0.5
            [sim.noise_law]
            kind = "skew_mix"
            weight = 0.9
            locations = [0.0, 0.3]
            sds = [0.02, 0.02]
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.estimator.semimetric, SemiMetric::L2);
        assert_eq!(cfg.predictors, vec![Predictor::Mode, Predictor::Mean]);
        assert_eq!(cfg.forecast_config(None).unwrap().bandwidth, BandwidthPolicy::Knn { k: 12 });
        assert_eq!(cfg.split.n_learn, 300);
    }

    #[test]
    fn every_violation_is_listed() {
        let cfg = RunConfig::from_toml(
            r#"
            predictors = []
            [bandwidth]
            mode = "fixed"
            [sim]
            ar_coeff = 1.5
            [converge]
            replications = 3
            "#,
        )
        .unwrap();
        let Err(Error::Validation(msgs)) = cfg.validate() else {
            panic!("expected validation failure")
        };
        let keys: Vec<&str> = msgs.iter().map(|m| m.split(':').next().unwrap()).collect();
        assert_eq!(keys, ["predictors", "bandwidth.h", "sim", "converge.replications"]);
    }

    #[test]
    fn unknown_values_rejected() {
        assert!(RunConfig::from_toml("[estimator]\nsemimetric = \"l1\"").is_err());
        assert!(RunConfig::from_toml("colour = 1").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            predictor: Some(Predictor::Median),
            phi: Some("integral".into()),
            k_grid: Some(vec![3, 6]),
            semimetric: Some(SemiMetric::L2),
        })
        .unwrap();
        assert_eq!(cfg.sim.seed, 9);
        assert_eq!(cfg.predictors, vec![Predictor::Median]);
        assert!(matches!(cfg.phi, FunctionalSpec::SeasonalIntegral { .. }));
        assert_eq!(cfg.cv_config(Predictor::Median, 100).k_grid, vec![3, 6]);
        assert!(cfg.apply(&Overrides { phi: Some("crossing".into()), ..Overrides::default() }).is_err());
    }
}

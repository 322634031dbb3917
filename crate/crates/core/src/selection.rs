//! Bandwidth choice: k-nearest-neighbour bandwidths and leave-one-out
//! cross-validation over `k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::estimators::{
    response_bandwidth, response_grid, ConditionalLaw, EstimatorConfig, LearningSet, Predictor,
};

/// Relative inflation of the k-th neighbour distance.
pub const KNN_INFLATION: f64 = 1e-9;
/// Number of times a failing bandwidth is doubled before giving up.
pub const MAX_DOUBLINGS: u32 = 8;
/// Largest `k` in the default cross-validation grid.
pub const DEFAULT_K_CAP: usize = 101;

/// How the covariate bandwidth is obtained for a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// The same `h` everywhere.
    Fixed { h: f64 },
    /// Distance to the k-th nearest learning covariate of each query.
    Knn { k: usize },
    /// Median over the learning covariates of their own k-NN distances.
    GlobalKnn { k: usize },
}

impl BandwidthPolicy {
    pub fn validate(&self, n_learn: usize) -> Result<()> {
        match *self {
            BandwidthPolicy::Fixed { h } if !(h > 0.0 && h.is_finite()) => {
                Err(Error::InvalidConfig(format!("fixed bandwidth {h} must be positive")))
            }
            BandwidthPolicy::Knn { k } | BandwidthPolicy::GlobalKnn { k } if k == 0 || k >= n_learn => {
                Err(Error::KOutOfRange { k, n: n_learn.saturating_sub(1) })
            }
            _ => Ok(()),
        }
    }
}

/// `{5, 10, ..., min(⌈n/2⌉, 101)}` restricted to `k < n`.
pub fn default_k_grid(n_learn: usize) -> Vec<usize> {
    let cap = n_learn.div_ceil(2).min(DEFAULT_K_CAP);
    let mut grid: Vec<usize> = (1..).map(|m| 5 * m).take_while(|k| *k <= cap).collect();
    if grid.is_empty() {
        grid.push(1);
    }
    grid.retain(|k| *k < n_learn);
    grid
}

fn inflate(d: f64) -> f64 {
    d.max(f64::MIN_POSITIVE) * (1.0 + KNN_INFLATION)
}

/// Learning covariates sorted by distance to one query, ties by index.
#[derive(Debug, Clone)]
pub struct Neighbors {
    order: Vec<(f64, usize)>,
    sorted: usize,
}

impl Neighbors {
    /// Skip entries whose index fails `keep`. Only the nearest `limit`
    /// entries are fully ordered; the rest follow unordered.
    pub fn new(distances: &[f64], keep: impl Fn(usize) -> bool, limit: usize) -> Self {
        let mut order: Vec<(f64, usize)> = distances
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(i, d)| (*d, i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let limit = limit.min(order.len());
        let sorted = if limit > 0 && limit < order.len() {
            order.select_nth_unstable_by(limit - 1, cmp);
            order[..limit].sort_unstable_by(cmp);
            limit
        } else {
            order.sort_unstable_by(cmp);
            order.len()
        };
        Self { order, sorted }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Inflated k-th smallest distance.
    pub fn knn_bandwidth(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.sorted {
            return Err(Error::KOutOfRange { k, n: self.sorted });
        }
        Ok(inflate(self.order[k - 1].0))
    }

    /// Positive weights for bandwidth `h`, in learning-index order.
    fn weighted(&self, h: f64, cfg: &EstimatorConfig) -> Vec<(usize, f64)> {
        let mut active: Vec<(usize, f64)> = Vec::new();
        let mut push = |d: f64, i: usize| {
            let w = cfg.covariate_kernel.eval(d / h);
            if w > 0.0 {
                active.push((i, w));
            }
        };
        let prefix = &self.order[..self.sorted];
        let within = prefix.partition_point(|e| e.0 <= h);
        prefix[..within].iter().for_each(|e| push(e.0, e.1));
        if within == prefix.len() {
            // Everything past the ordered prefix is at least as far; scan it unsorted.
            self.order[self.sorted..].iter().filter(|e| e.0 <= h).for_each(|e| push(e.0, e.1));
        }
        active.sort_unstable_by_key(|a| a.0);
        active
    }
}

/// Responses available to a prediction, with excluded days removed, in index order.
pub struct Pool<'a> {
    pub responses: &'a [f64],
    pub pool: Vec<f64>,
}

/// Predict from sorted neighbours with bandwidth `h0`, doubling `h` up to
/// [`MAX_DOUBLINGS`] times while the neighbourhood is empty or the density
/// misses the grid. Returns the prediction and whether `h` was enlarged.
pub fn predict_with_fallback(
    neighbors: &Neighbors,
    pool: &Pool<'_>,
    cfg: &EstimatorConfig,
    h0: f64,
    predictor: Predictor,
) -> Result<(f64, bool)> {
    let mut last = Error::ZeroNeighborhood { h: h0 };
    for attempt in 0..=MAX_DOUBLINGS {
        let h = h0 * f64::from(1u32 << attempt);
        match predict_once(neighbors, pool, cfg, h, predictor) {
            Ok(v) => return Ok((v, attempt > 0)),
            Err(e @ (Error::ZeroNeighborhood { .. } | Error::DegenerateDensity)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn predict_once(neighbors: &Neighbors, pool: &Pool<'_>, cfg: &EstimatorConfig, h: f64, predictor: Predictor) -> Result<f64> {
    let cfg = cfg.with_bandwidth(h);
    let active = neighbors.weighted(h, &cfg);
    let h_response = response_bandwidth(&cfg, &pool.pool);
    let grid = response_grid(&cfg, &pool.pool, h_response)?;
    let weights: Vec<f64> = active.iter().map(|a| a.1).collect();
    let responses: Vec<f64> = active.iter().map(|a| pool.responses[a.0]).collect();
    let law = ConditionalLaw::new(weights, &responses, h_response, cfg.response_kernel, h)?;
    law.predict(predictor, &grid)
}

/// Bandwidth `h` such that exactly `k` learning covariates lie within `h`
/// of `x` (for distinct distances).
pub fn knn_bandwidth(x: &Curve, learn: &LearningSet, k: usize) -> Result<f64> {
    if k == 0 || k > learn.len() {
        return Err(Error::KOutOfRange { k, n: learn.len() });
    }
    let distances = learn.distances(x)?;
    Neighbors::new(&distances, |_| true, k).knn_bandwidth(k)
}

/// Median over learning covariates of their k-NN distance to the others.
pub fn global_knn_bandwidth(matrix: &[Vec<f64>], k: usize) -> Result<f64> {
    let n = matrix.len();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n: n.saturating_sub(1) });
    }
    let mut hs = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| Neighbors::new(row, |j| j != i, k).knn_bandwidth(k))
        .collect::<Result<Vec<_>>>()?;
    hs.sort_unstable_by(f64::total_cmp);
    Ok(if n % 2 == 1 {
        hs[n / 2]
    } else {
        0.5 * (hs[n / 2 - 1] + hs[n / 2])
    })
}

/// Loss scored in cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvLoss {
    /// Relative absolute error, the reported metric.
    #[default]
    Rae,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub predictor: Predictor,
    pub k_grid: Vec<usize>,
    /// Also leave out `gap` neighbours on each side of the held-out day.
    pub gap: usize,
    pub loss: CvLoss,
    /// Score a single global bandwidth per `k` instead of local k-NN bandwidths.
    pub global: bool,
}

impl CvConfig {
    pub fn new(predictor: Predictor, k_grid: Vec<usize>) -> Self {
        Self {
            predictor,
            k_grid,
            gap: 0,
            loss: CvLoss::Rae,
            global: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub k: usize,
    /// Mean loss over scored days; `NaN` when none were scored.
    pub score: f64,
    pub scored: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best_k: usize,
    pub scores: Vec<CvScore>,
}

impl CvOutcome {
    pub fn best(&self) -> &CvScore {
        self.scores.iter().find(|s| s.k == self.best_k).expect("best k is scored")
    }
}

pub(crate) fn loss(kind: CvLoss, actual: f64, predicted: f64) -> Option<f64> {
    match kind {
        CvLoss::Rae => (actual != 0.0).then(|| (actual - predicted).abs() / actual.abs()),
        CvLoss::Squared => Some((actual - predicted) * (actual - predicted)),
    }
}

/// Leave-one-out choice of `k`: each learning pair is predicted from the
/// others with its own k-NN bandwidth; the `k` with the smallest mean loss
/// wins, ties going to the smaller `k`.
pub fn select_k_cv(learn: &LearningSet, cfg: &EstimatorConfig, cv: &CvConfig) -> Result<CvOutcome> {
    let matrix = learn.distance_matrix();
    select_k_cv_with_matrix(learn, &matrix, cfg, cv)
}

/// [`select_k_cv`] with a precomputed distance matrix.
pub fn select_k_cv_with_matrix(
    learn: &LearningSet,
    matrix: &[Vec<f64>],
    cfg: &EstimatorConfig,
    cv: &CvConfig,
) -> Result<CvOutcome> {
    cfg.validate()?;
    let n = learn.len();
    if n < 3 {
        return Err(Error::InvalidConfig(format!("cross-validation needs 3 learning pairs, got {n}")));
    }
    if cv.k_grid.is_empty() {
        return Err(Error::InvalidConfig("empty k grid".into()));
    }
    let available = n.saturating_sub(1 + 2 * cv.gap);
    if let Some(&k) = cv.k_grid.iter().find(|&&k| k == 0 || k > available || k >= n) {
        return Err(Error::KOutOfRange { k, n: available });
    }
    let kmax = *cv.k_grid.iter().max().expect("non-empty");
    let global_h = if cv.global {
        Some(cv.k_grid.iter().map(|&k| global_knn_bandwidth(matrix, k)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };

    let responses = learn.responses();
    let per_fold: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<Option<f64>>> {
            let excluded = |j: usize| j.abs_diff(i) <= cv.gap;
            let neighbors = Neighbors::new(&matrix[i], |j| !excluded(j), kmax);
            let pool = Pool {
                responses,
                pool: responses.iter().enumerate().filter(|(j, _)| !excluded(*j)).map(|(_, r)| *r).collect(),
            };
            cv.k_grid
                .iter()
                .enumerate()
                .map(|(slot, &k)| {
                    let h = match &global_h {
                        Some(hs) => hs[slot],
                        None => neighbors.knn_bandwidth(k)?,
                    };
                    match predict_with_fallback(&neighbors, &pool, cfg, h, cv.predictor) {
                        Ok((p, _)) => Ok(loss(cv.loss, responses[i], p)),
                        Err(Error::ZeroNeighborhood { .. } | Error::DegenerateDensity) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let scores: Vec<CvScore> = cv
        .k_grid
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            let (mut sum, mut scored) = (0.0, 0usize);
            for fold in &per_fold {
                if let Some(l) = fold[slot] {
                    sum += l;
                    scored += 1;
                }
            }
            CvScore {
                k,
                score: if scored > 0 { sum / scored as f64 } else { f64::NAN },
                scored,
                skipped: n - scored,
            }
        })
        .collect();

    let best = scores
        .iter()
        .filter(|s| s.scored > 0)
        .min_by(|a, b| a.score.total_cmp(&b.score).then(a.k.cmp(&b.k)))
        .ok_or(Error::CvFailed)?;
    Ok(CvOutcome {
        best_k: best.k,
        scores,
    })
}

//! Hyperparameter grids and cross-validated grid search.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{auc, stratified_folds};
use crate::learners::{fit, Dataset, ForestParams, HyperParams, LogRegOptions, Model, ModelFamily};

/// `count` values geometrically spaced from `lo` to `hi`, both included.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// The 100 regularization strengths from 1e-4 to 1e4.
pub fn lr_lambda_grid() -> Vec<f64> {
    log_spaced(1e-4, 1e4, 100)
}

/// Trees 100..=1000 step 100, feature fraction 0.10..=0.90 step 0.05 and
/// minimum samples 1, 2, 4, ..., 64.
pub fn rf_param_grid() -> Vec<ForestParams> {
    let mut grid = Vec::with_capacity(10 * 17 * 7);
    for n_trees in (1..=10).map(|i| i * 100) {
        for f in 0..17 {
            // Integer steps avoid accumulating 0.05 in floating point.
            let feature_fraction = f64::from(10 + 5 * f) / 100.0;
            for e in 0..7 {
                grid.push(ForestParams {
                    n_trees,
                    feature_fraction,
                    min_samples: 1 << e,
                });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParamGrid {
    pub lr_lambdas: Vec<f64>,
    pub rf: Vec<ForestParams>,
}

impl Default for HyperParamGrid {
    fn default() -> Self {
        HyperParamGrid {
            lr_lambdas: lr_lambda_grid(),
            rf: rf_param_grid(),
        }
    }
}

impl HyperParamGrid {
    pub fn points(&self, family: ModelFamily) -> Vec<HyperParams> {
        match family {
            ModelFamily::LogReg => self
                .lr_lambdas
                .iter()
                .map(|&lambda| HyperParams::LogReg { lambda })
                .collect(),
            ModelFamily::Forest => self.rf.iter().copied().map(HyperParams::Forest).collect(),
        }
    }
}

/// Grid search settings shared by every fit in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuner {
    pub grid: HyperParamGrid,
    pub k: usize,
    pub seed: u64,
    pub lr_options: LogRegOptions,
}

impl Default for Tuner {
    fn default() -> Self {
        Tuner {
            grid: HyperParamGrid::default(),
            k: 3,
            seed: 0,
            lr_options: LogRegOptions::default(),
        }
    }
}

impl Tuner {
    /// Copy with a seed mixed with `salt`, so repeated tunings draw distinct
    /// folds and forests.
    pub fn reseeded(&self, salt: u64) -> Tuner {
        Tuner {
            seed: mix(self.seed, salt),
            ..self.clone()
        }
    }

    pub fn tune(&self, data: &Dataset, family: ModelFamily) -> Result<GridResult> {
        grid_search(data, &self.grid.points(family), self.k, self.seed, &self.lr_options)
    }
}

/// SplitMix64 finalizer over `seed ^ salt`.
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: HyperParams,
    pub model: Model,
    /// Mean validation AUC of every evaluated point; empty for a singleton grid.
    pub scores: Vec<(HyperParams, f64)>,
}

/// Orders points from weakest to strongest regularization.
fn regularization_order(a: &HyperParams, b: &HyperParams) -> Ordering {
    match (a, b) {
        (HyperParams::LogReg { lambda: x }, HyperParams::LogReg { lambda: y }) => x.total_cmp(y),
        (HyperParams::Forest(x), HyperParams::Forest(y)) => x
            .min_samples
            .cmp(&y.min_samples)
            .then(y.n_trees.cmp(&x.n_trees))
            .then(y.feature_fraction.total_cmp(&x.feature_fraction)),
        _ => Ordering::Equal,
    }
}

/// Picks the point with the highest mean validation AUC over `k` stratified
/// folds, preferring stronger regularization on ties, then refits it on all
/// of `data`. A single-point grid is refit without cross-validation.
pub fn grid_search(
    data: &Dataset,
    grid: &[HyperParams],
    k: usize,
    seed: u64,
    lr_options: &LogRegOptions,
) -> Result<GridResult> {
    let fit_seed = mix(seed, 1);
    match grid {
        [] => Err(Error::EmptyGrid),
        [only] => Ok(GridResult {
            best: *only,
            model: fit(data, only, lr_options, fit_seed)?,
            scores: Vec::new(),
        }),
        _ => {
            let folds = stratified_folds(&data.labels, k, seed)?;
            let splits: Vec<(Dataset, Dataset)> = (0..k)
                .map(|f| {
                    let (train, valid) = folds.split(f);
                    (data.subset(&train), data.subset(&valid))
                })
                .collect();
            let mut scores = Vec::with_capacity(grid.len());
            for point in grid {
                let mut total = 0.0;
                for (train, valid) in &splits {
                    let model = fit(train, point, lr_options, fit_seed)?;
                    let predictions = model.predict_rows(valid.features.view())?;
                    total += auc(&predictions, &valid.labels)?;
                }
                scores.push((*point, total / k as f64));
            }
            let best = scores
                .iter()
                .copied()
                .reduce(|best, cand| {
                    let tol = 1e-12;
                    if cand.1 > best.1 + tol
                        || ((cand.1 - best.1).abs() <= tol
                            && regularization_order(&cand.0, &best.0) == Ordering::Greater)
                    {
                        cand
                    } else {
                        best
                    }
                })
                .expect("grid has at least two points")
                .0;
            Ok(GridResult {
                best,
                model: fit(data, &best, lr_options, fit_seed)?,
                scores,
            })
        }
    }
}

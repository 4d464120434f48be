//! Random forest of Gini-split classification trees.

use ndarray::ArrayView2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Dataset;

/// Gini impurity `1 - p+^2 - p-^2` of a node with the given class counts.
pub fn gini(n_neg: usize, n_pos: usize) -> Result<f64> {
    let n = n_neg + n_pos;
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let p = n_pos as f64 / n as f64;
    let q = n_neg as f64 / n as f64;
    Ok(1.0 - p * p - q * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Fraction of features drawn (without replacement) at each split.
    pub feature_fraction: f64,
    /// Minimum node size for splitting and minimum child size.
    pub min_samples: usize,
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("a forest needs at least one tree".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "feature_fraction must be in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        if self.min_samples == 0 {
            return Err(Error::Config("min_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Features evaluated per split for `d` input features.
    pub fn features_per_split(&self, d: usize) -> usize {
        ((self.feature_fraction * d as f64).ceil() as usize).clamp(1, d.max(1))
    }
}

/// Nodes refer to their children by index into [`Tree::nodes`]; the root is
/// node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positive_fraction: f64,
        n_samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Positive fraction of the leaf `x` falls into.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        &self.nodes[*left]
                    } else {
                        &self.nodes[*right]
                    };
                }
                TreeNode::Leaf {
                    positive_fraction, ..
                } => return *positive_fraction,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
}

impl ForestModel {
    /// Mean leaf positive fraction over all trees.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let total: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(total / self.trees.len() as f64)
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let mut row = vec![0.0; x.ncols()];
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                row.iter_mut().zip(r).for_each(|(d, s)| *d = *s);
                self.trees.iter().map(|t| t.predict(&row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect())
    }
}

/// RNG for tree `index` of a forest seeded with `seed`. Each tree owns an
/// independent stream so trees can be built in any order.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn train_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    params.validate()?;
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if n < 2 {
        return Err(Error::Validation("a forest needs at least two examples".into()));
    }
    if params.min_samples > n {
        return Err(Error::Config(format!(
            "min_samples {} exceeds the {n} training examples",
            params.min_samples
        )));
    }
    data.check_finite()?;
    let positive: Vec<bool> = data.labels.iter().map(|l| l.is_positive()).collect();
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = tree_rng(seed, t as u64);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            build_tree(data.features.view(), &positive, sample, params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: *params,
        seed,
        n_features: data.n_features(),
    })
}

/// Grows one tree on the (possibly repeated) row indices in `sample`.
pub fn build_tree<R: Rng>(
    x: ArrayView2<f64>,
    positive: &[bool],
    sample: Vec<usize>,
    params: &ForestParams,
    rng: &mut R,
) -> Tree {
    let mut nodes = Vec::new();
    grow(x, positive, sample, params, rng, &mut nodes);
    Tree { nodes }
}

fn grow<R: Rng>(
    x: ArrayView2<f64>,
    positive: &[bool],
    sample: Vec<usize>,
    params: &ForestParams,
    rng: &mut R,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let id = nodes.len();
    let n_pos = sample.iter().filter(|&&i| positive[i]).count();
    let leaf = TreeNode::Leaf {
        positive_fraction: n_pos as f64 / sample.len() as f64,
        n_samples: sample.len(),
    };
    nodes.push(leaf);

    let pure = n_pos == 0 || n_pos == sample.len();
    if pure || sample.len() < params.min_samples {
        return id;
    }
    let d = x.ncols();
    let mut features = index::sample(rng, d, params.features_per_split(d)).into_vec();
    features.sort_unstable();
    let Some(split) = best_split(x, positive, &sample, &features, params.min_samples) else {
        return id;
    };

    let (left, right): (Vec<usize>, Vec<usize>) = sample
        .into_iter()
        .partition(|&i| x[[i, split.feature]] <= split.threshold);
    let l = grow(x, positive, left, params, rng, nodes);
    let r = grow(x, positive, right, params, rng, nodes);
    nodes[id] = TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: l,
        right: r,
    };
    id
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Size-weighted Gini impurity of the two children.
    pub weighted_gini: f64,
}

/// Lowest weighted-Gini split over `features` (ascending) with both children
/// holding at least `min_samples` rows. Thresholds are midpoints between
/// consecutive distinct values. Ties keep the lowest feature index, then the
/// smallest threshold. `None` when no split lowers the parent impurity.
pub fn best_split(
    x: ArrayView2<f64>,
    positive: &[bool],
    sample: &[usize],
    features: &[usize],
    min_samples: usize,
) -> Option<Split> {
    let n = sample.len();
    let total_pos = sample.iter().filter(|&&i| positive[i]).count();
    let total_neg = n - total_pos;
    // Minimizing n * weighted_gini = n - score, where score sums
    // (pos^2 + neg^2) / size over the children.
    let parent_score = ((total_pos * total_pos + total_neg * total_neg) as f64) / n as f64;
    let min_child = min_samples.max(1);
    let mut best: Option<(f64, usize, f64)> = None;
    let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);

    for &f in features {
        column.clear();
        column.extend(sample.iter().map(|&i| (x[[i, f]], positive[i])));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let (mut lp, mut ln) = (0usize, 0usize);
        for k in 0..n - 1 {
            if column[k].1 {
                lp += 1;
            } else {
                ln += 1;
            }
            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo == hi {
                continue;
            }
            let left = k + 1;
            let right = n - left;
            if left < min_child || right < min_child {
                continue;
            }
            let (rp, rn) = (total_pos - lp, total_neg - ln);
            let score = ((lp * lp + ln * ln) as f64) / left as f64
                + ((rp * rp + rn * rn) as f64) / right as f64;
            let tol = 1e-12 * score.abs().max(1.0);
            let improves_parent = score > parent_score + tol;
            let beats_best = best.is_none_or(|(s, _, _)| score > s + tol);
            if improves_parent && beats_best {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((score, f, threshold));
            }
        }
    }
    best.map(|(score, feature, threshold)| Split {
        feature,
        threshold,
        weighted_gini: (n as f64 - score) / n as f64,
    })
}

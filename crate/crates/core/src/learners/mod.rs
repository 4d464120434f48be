//! The two model families used at both ensemble levels.

mod forest;
mod logreg;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use forest::{
    best_split, build_tree, gini, train_forest, tree_rng, ForestModel, ForestParams, Split, Tree,
    TreeNode,
};
pub use logreg::{
    logreg_gradient, logreg_objective, sigmoid, train_logreg, LinearModel, LogRegOptions,
    Solver, Standardization,
};

use crate::cohort::Label;
use crate::error::{Error, Result};

/// Dense feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch(features.nrows(), labels.len()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(ndarray::Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for (row, r) in self.features.rows().into_iter().enumerate() {
            if let Some(column) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, column });
            }
        }
        Ok(())
    }

    /// Non-empty, finite and containing both classes.
    pub(crate) fn check_trainable(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyData);
        }
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::DegenerateLabels);
        }
        self.check_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "LR")]
    LogReg,
    #[serde(rename = "RF")]
    Forest,
}

impl ModelFamily {
    pub fn short_name(self) -> &'static str {
        match self {
            ModelFamily::LogReg => "LR",
            ModelFamily::Forest => "RF",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "LR" | "lr" => Ok(ModelFamily::LogReg),
            "RF" | "rf" => Ok(ModelFamily::Forest),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum HyperParams {
    #[serde(rename = "LR")]
    LogReg { lambda: f64 },
    #[serde(rename = "RF")]
    Forest(ForestParams),
}

impl HyperParams {
    pub fn family(&self) -> ModelFamily {
        match self {
            HyperParams::LogReg { .. } => ModelFamily::LogReg,
            HyperParams::Forest(_) => ModelFamily::Forest,
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::LogReg { lambda } => write!(f, "lambda={lambda:e}"),
            HyperParams::Forest(p) => write!(
                f,
                "trees={} fraction={} min_samples={}",
                p.n_trees, p.feature_fraction, p.min_samples
            ),
        }
    }
}

/// A fitted predictor of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    Forest(ForestModel),
}

impl Model {
    pub fn family(&self) -> ModelFamily {
        match self {
            Model::Linear(_) => ModelFamily::LogReg,
            Model::Forest(_) => ModelFamily::Forest,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Linear(m) => m.n_features(),
            Model::Forest(m) => m.n_features,
        }
    }

    /// Score in [0, 1].
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            Model::Linear(m) => m.predict_rows(x),
            Model::Forest(m) => m.predict_rows(x),
        }
    }
}

/// Fits one model. `seed` only matters for forests.
pub fn fit(data: &Dataset, params: &HyperParams, options: &LogRegOptions, seed: u64) -> Result<Model> {
    match params {
        HyperParams::LogReg { lambda } => train_logreg(data, *lambda, options).map(Model::Linear),
        HyperParams::Forest(p) => {
            data.check_trainable()?;
            train_forest(data, p, seed).map(Model::Forest)
        }
    }
}

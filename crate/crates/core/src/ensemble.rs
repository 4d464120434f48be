//! Time-indexed pools of level-0 models and the level-1 combiner trained on
//! their scores.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cohort::{AggregatedInstance, Cohort, FeatureSchema, InformationLevel, MonthChunk};
use crate::error::{Error, Result};
use crate::evaluation::Tuner;
use crate::learners::{Dataset, HyperParams, Model, ModelFamily};
use crate::month::MonthIndex;

/// Which chunks a level-0 model sees when trained for month `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingVariant {
    /// Only chunk `t - 3`.
    LastMonth,
    /// Every chunk up to and including `t - 3`.
    AllPrevious,
}

impl TrainingVariant {
    pub fn short_name(self) -> &'static str {
        match self {
            TrainingVariant::LastMonth => "last",
            TrainingVariant::AllPrevious => "all",
        }
    }
}

/// Which pools feed a level-1 model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolComposition {
    From1,
    From2,
    From1And2,
}

impl PoolComposition {
    pub fn variants(self) -> &'static [TrainingVariant] {
        match self {
            PoolComposition::From1 => &[TrainingVariant::LastMonth],
            PoolComposition::From2 => &[TrainingVariant::AllPrevious],
            PoolComposition::From1And2 => &[TrainingVariant::LastMonth, TrainingVariant::AllPrevious],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PoolComposition::From1 => "from_1",
            PoolComposition::From2 => "from_2",
            PoolComposition::From1And2 => "from_1_and_2",
        }
    }
}

impl fmt::Display for PoolComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolComposition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [PoolComposition::From1, PoolComposition::From2, PoolComposition::From1And2]
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown pool composition `{s}`")))
    }
}

/// A fitted model together with the feature level it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: Model,
    pub level: InformationLevel,
    pub params: HyperParams,
}

impl TrainedModel {
    /// Scores for `instances` after projecting them to the model's level.
    pub fn score(&self, schema: &FeatureSchema, instances: &[&AggregatedInstance]) -> Result<Vec<f64>> {
        let x = schema.project_rows(instances.iter().map(|i| i.features.as_slice()), self.level)?;
        self.model.predict_rows(x.view())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub trained_at: MonthIndex,
    pub variant: TrainingVariant,
    pub model: Arc<TrainedModel>,
}

/// Append-only list of level-0 models. Within one variant, `trained_at` is
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level0Pool {
    pub level: InformationLevel,
    pub entries: Vec<PoolEntry>,
}

impl Level0Pool {
    pub fn new(level: InformationLevel) -> Self {
        Level0Pool {
            level,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, trained_at: MonthIndex, variant: TrainingVariant, model: Arc<TrainedModel>) -> Result<()> {
        if model.level != self.level {
            return Err(Error::Validation(format!(
                "pool at {} cannot hold a model trained on {}",
                self.level, model.level
            )));
        }
        if let Some(prev) = self.entries.iter().rev().find(|e| e.variant == variant) {
            if prev.trained_at >= trained_at {
                return Err(Error::Validation(format!(
                    "pool months must increase: {} after {}",
                    trained_at, prev.trained_at
                )));
            }
        }
        self.entries.push(PoolEntry {
            trained_at,
            variant,
            model,
        });
        Ok(())
    }

    /// Entries of `self` followed by those of `other`.
    pub fn concat(&self, other: &Level0Pool) -> Result<Level0Pool> {
        if self.level != other.level {
            return Err(Error::Validation("cannot join pools of different levels".into()));
        }
        Ok(Level0Pool {
            level: self.level,
            entries: self.entries.iter().chain(&other.entries).cloned().collect(),
        })
    }
}

/// Pool plus the level-1 model trained over its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub pool: Level0Pool,
    pub composition: PoolComposition,
    pub level1: Model,
    pub level1_params: HyperParams,
}

/// Labeled instances a level-0 model for month `t` trains on.
pub fn training_instances(
    chunks: &[MonthChunk],
    t: MonthIndex,
    variant: TrainingVariant,
) -> Vec<&AggregatedInstance> {
    let newest = t.offset(-3);
    chunks
        .iter()
        .filter(|c| match variant {
            TrainingVariant::LastMonth => c.t == newest,
            TrainingVariant::AllPrevious => c.t <= newest,
        })
        .flat_map(|c| c.labeled())
        .collect()
}

/// Projects labeled instances into a dataset.
pub fn dataset(
    schema: &FeatureSchema,
    instances: &[&AggregatedInstance],
    level: InformationLevel,
) -> Result<Dataset> {
    let x = schema.project_rows(instances.iter().map(|i| i.features.as_slice()), level)?;
    let labels = instances
        .iter()
        .map(|i| {
            i.label
                .ok_or_else(|| Error::Validation(format!("instance of {} has no label", i.citizen_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(x, labels)
}

/// Tunes and fits a level-0 model for month `t`.
pub fn train_level0(
    cohort: &Cohort,
    t: MonthIndex,
    variant: TrainingVariant,
    family: ModelFamily,
    level: InformationLevel,
    tuner: &Tuner,
) -> Result<TrainedModel> {
    let instances = training_instances(&cohort.chunks, t, variant);
    if instances.is_empty() {
        return Err(Error::EmptyTrainingWindow(t.to_string()));
    }
    let data = dataset(&cohort.schema, &instances, level)?;
    if data.positives() == 0 || data.positives() == data.len() {
        return Err(Error::DegenerateLabels);
    }
    let result = tuner.tune(&data, family)?;
    Ok(TrainedModel {
        model: result.model,
        level,
        params: result.best,
    })
}

/// Row `i`, column `k`: score of pool entry `k` on instance `i`.
pub fn build_meta_features(
    pool: &Level0Pool,
    schema: &FeatureSchema,
    instances: &[&AggregatedInstance],
) -> Result<Array2<f64>> {
    if pool.is_empty() {
        return Err(Error::Validation("level-0 pool is empty".into()));
    }
    let x = schema.project_rows(instances.iter().map(|i| i.features.as_slice()), pool.level)?;
    let mut meta = Array2::zeros((instances.len(), pool.len()));
    for (k, entry) in pool.entries.iter().enumerate() {
        let scores = entry.model.model.predict_rows(x.view())?;
        meta.column_mut(k).assign(&ndarray::Array1::from(scores));
    }
    Ok(meta)
}

/// Fits the level-1 model on the pool's scores for the labeled instances of
/// `train_chunk`.
pub fn train_level1(
    pool: &Level0Pool,
    composition: PoolComposition,
    schema: &FeatureSchema,
    train_chunk: &MonthChunk,
    family: ModelFamily,
    tuner: &Tuner,
) -> Result<StackedEnsemble> {
    let instances: Vec<&AggregatedInstance> = train_chunk.labeled().collect();
    let meta = build_meta_features(pool, schema, &instances)?;
    let labels = instances.iter().filter_map(|i| i.label).collect();
    let data = Dataset::new(meta, labels)?;
    if data.positives() == 0 || data.positives() == data.len() {
        return Err(Error::DegenerateLabels);
    }
    let result = tuner.tune(&data, family)?;
    Ok(StackedEnsemble {
        pool: pool.clone(),
        composition,
        level1: result.model,
        level1_params: result.best,
    })
}

pub fn predict_ensemble(
    ensemble: &StackedEnsemble,
    schema: &FeatureSchema,
    instances: &[&AggregatedInstance],
) -> Result<Vec<f64>> {
    if instances.is_empty() {
        return Ok(Vec::new());
    }
    let meta = build_meta_features(&ensemble.pool, schema, instances)?;
    ensemble.level1.predict_rows(meta.view())
}

//! Month-by-month evaluation: train on data from three months back, test on
//! the current month.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cohort::{AggregatedInstance, Cohort, InformationLevel, Label};
use crate::ensemble::{
    predict_ensemble, train_level0, train_level1, Level0Pool, PoolComposition, StackedEnsemble,
    TrainingVariant,
};
use crate::error::{Error, Result};
use crate::evaluation::{auc, baseline_12_months, baseline_3_months, Tuner};
use crate::learners::ModelFamily;
use crate::month::MonthIndex;

/// Months between the newest training chunk and the test chunk.
pub const TRAINING_LAG: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Baseline3m,
    Baseline12m,
    Single {
        family: ModelFamily,
        variant: TrainingVariant,
    },
    Stacked {
        level0: ModelFamily,
        level1: ModelFamily,
        pool: PoolComposition,
    },
}

impl Method {
    /// The methods of the full experiment matrix.
    pub fn all() -> Vec<Method> {
        use ModelFamily::*;
        let mut out = vec![Method::Baseline3m, Method::Baseline12m];
        for family in [Forest, LogReg] {
            for variant in [TrainingVariant::LastMonth, TrainingVariant::AllPrevious] {
                out.push(Method::Single { family, variant });
            }
        }
        for (level0, level1) in [(Forest, LogReg), (Forest, Forest), (LogReg, Forest), (LogReg, LogReg)] {
            for pool in [PoolComposition::From1, PoolComposition::From2, PoolComposition::From1And2] {
                out.push(Method::Stacked { level0, level1, pool });
            }
        }
        out
    }

    /// Level-0 pools the method reads.
    fn pools(&self) -> Vec<(ModelFamily, TrainingVariant)> {
        match *self {
            Method::Baseline3m | Method::Baseline12m => Vec::new(),
            Method::Single { family, variant } => vec![(family, variant)],
            Method::Stacked { level0, pool, .. } => {
                pool.variants().iter().map(|v| (level0, *v)).collect()
            }
        }
    }

    fn is_stacked(&self) -> bool {
        matches!(self, Method::Stacked { .. })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Baseline3m => f.write_str("baseline_3m"),
            Method::Baseline12m => f.write_str("baseline_12m"),
            Method::Single { family, variant } => write!(f, "{family}_{}", variant.short_name()),
            Method::Stacked { level0, level1, pool } => write!(f, "{level0}+{level1}:{pool}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown method `{s}`"));
        match s {
            "baseline_3m" => return Ok(Method::Baseline3m),
            "baseline_12m" => return Ok(Method::Baseline12m),
            _ => {}
        }
        if let Some((families, pool)) = s.split_once(':') {
            let (l0, l1) = families.split_once('+').ok_or_else(bad)?;
            return Ok(Method::Stacked {
                level0: l0.parse()?,
                level1: l1.parse()?,
                pool: pool.parse()?,
            });
        }
        let (family, variant) = s.split_once('_').ok_or_else(bad)?;
        let variant = match variant {
            "last" => TrainingVariant::LastMonth,
            "all" => TrainingVariant::AllPrevious,
            _ => return Err(bad()),
        };
        Ok(Method::Single {
            family: family.parse()?,
            variant,
        })
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyResult {
    pub t: MonthIndex,
    pub method: Method,
    pub level: InformationLevel,
    /// `None` when the test chunk lacks one of the classes.
    pub auc: Option<f64>,
    pub n_test: usize,
    pub n_pos: usize,
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub level: InformationLevel,
    pub methods: Vec<Method>,
    /// Defaults to the first month with three months of labeled history.
    pub first_test: Option<MonthIndex>,
    /// Defaults to the last labeled chunk.
    pub last_test: Option<MonthIndex>,
    pub tuner: Tuner,
}

/// Results plus the models standing at the end of the run.
#[derive(Debug, Clone)]
pub struct RollingOutcome {
    pub results: Vec<MonthlyResult>,
    pub pools: BTreeMap<(ModelFamily, TrainingVariant), Level0Pool>,
    pub ensembles: BTreeMap<Method, StackedEnsemble>,
}

/// First and last test month for `cohort` under `config`.
pub fn test_span(cohort: &Cohort, config: &ProtocolConfig) -> Result<(MonthIndex, MonthIndex)> {
    let labeled: Vec<MonthIndex> = cohort
        .chunks
        .iter()
        .filter(|c| c.labeled_count() > 0)
        .map(|c| c.t)
        .collect();
    if labeled.len() < 4 {
        return Err(Error::InsufficientHistory(format!(
            "{} labeled chunks, at least 4 are needed",
            labeled.len()
        )));
    }
    let earliest = labeled[0].offset(TRAINING_LAG);
    let latest = *labeled.last().unwrap();
    let first = config.first_test.unwrap_or(earliest);
    let last = config.last_test.unwrap_or(latest);
    if first < earliest {
        return Err(Error::InsufficientHistory(format!(
            "first test month {first} precedes {earliest}, the earliest month with training data"
        )));
    }
    if last > latest || last < first {
        return Err(Error::InsufficientHistory(format!(
            "test span {first}..{last} is outside the labeled chunks {earliest}..{latest}"
        )));
    }
    Ok((first, last))
}

/// Runs every configured method over the test span at one information level.
/// Level-0 pools are shared between methods that read the same
/// (family, variant) pair.
pub fn rolling_protocol(cohort: &Cohort, config: &ProtocolConfig) -> Result<RollingOutcome> {
    let (first, last) = test_span(cohort, config)?;
    let level = config.level;
    let earliest = cohort
        .chunks
        .iter()
        .find(|c| c.labeled_count() > 0)
        .map(|c| c.t.offset(TRAINING_LAG))
        .expect("span check found labeled chunks");

    // Pools used by stacked methods need every month from the start; pools
    // used only by single-model methods are needed from the first test month.
    let mut pool_start: BTreeMap<(ModelFamily, TrainingVariant), MonthIndex> = BTreeMap::new();
    for method in &config.methods {
        let start = if method.is_stacked() { earliest } else { first };
        for key in method.pools() {
            let entry = pool_start.entry(key).or_insert(start);
            *entry = (*entry).min(start);
        }
    }
    let mut pools: BTreeMap<(ModelFamily, TrainingVariant), Level0Pool> = pool_start
        .keys()
        .map(|k| (*k, Level0Pool::new(level)))
        .collect();

    let mut results = Vec::new();
    let mut ensembles = BTreeMap::new();
    let start = pool_start.values().min().copied().unwrap_or(first).min(first);
    let mut t = start;
    while t <= last {
        let ctx = |e: Error, what: &str| e.context(format!("{what} at {level}, month {t}"));
        for (key, pool) in pools.iter_mut() {
            if t < pool_start[key] {
                continue;
            }
            let (family, variant) = *key;
            let tuner = config.tuner.reseeded(month_salt(t, 0));
            let model = train_level0(cohort, t, variant, family, level, &tuner)
                .map_err(|e| ctx(e, &format!("{family}_{} level-0", variant.short_name())))?;
            pool.push(t, variant, Arc::new(model))?;
        }

        if t >= first {
            let test: Vec<&AggregatedInstance> = cohort
                .chunk(t)
                .map(|c| c.labeled().collect())
                .unwrap_or_default();
            let labels: Vec<Label> = test.iter().filter_map(|i| i.label).collect();
            let n_pos = labels.iter().filter(|l| l.is_positive()).count();
            for method in &config.methods {
                let scores = match *method {
                    Method::Baseline3m => test
                        .iter()
                        .map(|i| baseline_3_months(i, &cohort.schema))
                        .collect(),
                    Method::Baseline12m => test
                        .iter()
                        .map(|i| baseline_12_months(i, &cohort.history))
                        .collect(),
                    Method::Single { family, variant } => {
                        let entry = pools[&(family, variant)]
                            .entries
                            .last()
                            .expect("pool trained this month");
                        entry.model.score(&cohort.schema, &test)?
                    }
                    Method::Stacked {
                        level0,
                        level1,
                        pool,
                    } => {
                        let members = pool
                            .variants()
                            .iter()
                            .map(|v| &pools[&(level0, *v)])
                            .try_fold(Level0Pool::new(level), |acc, p| acc.concat(p))?;
                        let train_chunk = cohort.chunk(t.offset(-TRAINING_LAG)).ok_or_else(|| {
                            ctx(Error::EmptyTrainingWindow(t.to_string()), &method.to_string())
                        })?;
                        let tuner = config.tuner.reseeded(month_salt(t, 1));
                        let ensemble =
                            train_level1(&members, pool, &cohort.schema, train_chunk, level1, &tuner)
                                .map_err(|e| ctx(e, &format!("{method} level-1")))?;
                        let scores = predict_ensemble(&ensemble, &cohort.schema, &test)?;
                        ensembles.insert(*method, ensemble);
                        scores
                    }
                };
                let value = match auc(&scores, &labels) {
                    Ok(v) => Some(v),
                    Err(Error::AucUndefined) => None,
                    Err(e) => return Err(ctx(e, &method.to_string())),
                };
                results.push(MonthlyResult {
                    t,
                    method: *method,
                    level,
                    auc: value,
                    n_test: labels.len(),
                    n_pos,
                });
            }
        }
        t = t.offset(1);
    }
    Ok(RollingOutcome {
        results,
        pools,
        ensembles,
    })
}

fn month_salt(t: MonthIndex, stage: u64) -> u64 {
    (t.0 as u64) << 2 | stage
}

/// Mean of the defined monthly AUCs, with the number of months averaged.
pub fn average_auc<'a, I>(results: I) -> Option<(f64, usize)>
where
    I: IntoIterator<Item = &'a MonthlyResult>,
{
    let values: Vec<f64> = results.into_iter().filter_map(|r| r.auc).collect();
    if values.is_empty() {
        None
    } else {
        Some((values.iter().sum::<f64>() / values.len() as f64, values.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        let all = Method::all();
        assert_eq!(all.len(), 2 + 4 + 12);
        for m in &all {
            assert_eq!(&m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!(
            "LR_all".parse::<Method>().unwrap(),
            Method::Single {
                family: ModelFamily::LogReg,
                variant: TrainingVariant::AllPrevious
            }
        );
        assert_eq!(
            "RF+LR:from_1_and_2".parse::<Method>().unwrap().to_string(),
            "RF+LR:from_1_and_2"
        );
        assert!("LR_sometimes".parse::<Method>().is_err());
        assert!("XX+LR:from_1".parse::<Method>().is_err());
    }

    #[test]
    fn average_skips_undefined_months() {
        let r = |auc| MonthlyResult {
            t: MonthIndex(0),
            method: Method::Baseline3m,
            level: InformationLevel::IL1,
            auc,
            n_test: 1,
            n_pos: 0,
        };
        let rows = [r(Some(0.5)), r(None), r(Some(0.7))];
        let (avg, n) = average_auc(&rows).unwrap();
        assert!((avg - 0.6).abs() < 1e-15);
        assert_eq!(n, 2);
        assert!(average_auc(&[r(None)]).is_none());
    }
}

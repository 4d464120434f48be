//! Predicting large increases in citizen home-care hours with chunked
//! stacking ensembles.
//!
//! The pipeline runs ingest → 3-month window aggregation → per-month level-0
//! models (logistic regression or random forest) → a level-1 combiner over
//! the pool's scores, evaluated month by month with AUC.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohort;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod month;
pub mod runner;
pub mod synth;

pub use cohort::{
    AggregatedInstance, CitizenId, CitizenMonthRecord, Cohort, FeatureSchema, InformationLevel,
    Label, MonthChunk, WindowConfig,
};
pub use error::{Error, Result};
pub use month::MonthIndex;

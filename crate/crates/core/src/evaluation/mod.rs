//! AUC, baselines, cross-validated tuning and the rolling evaluation protocol.

mod auc;
mod baselines;
mod folds;
mod grid;
mod protocol;

pub use auc::auc;
pub use baselines::{baseline_12_months, baseline_3_months};
pub use folds::{stratified_folds, FoldAssignment};
pub use grid::{
    grid_search, log_spaced, lr_lambda_grid, rf_param_grid, GridResult, HyperParamGrid, Tuner,
};
pub use protocol::{
    average_auc, rolling_protocol, test_span, Method, MonthlyResult, ProtocolConfig,
    RollingOutcome, TRAINING_LAG,
};

//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cohort::{InformationLevel, WindowConfig};
use crate::error::{Error, Result};
use crate::evaluation::{lr_lambda_grid, rf_param_grid, HyperParamGrid, Method, Tuner};
use crate::learners::{ForestParams, LogRegOptions, Solver};
use crate::month::MonthIndex;
use crate::synth::check_keys;

/// Schema version written to and expected in config files.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpan {
    pub first: Option<MonthIndex>,
    pub last: Option<MonthIndex>,
}

/// Hyperparameter grids; each omitted list falls back to the full default grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lr_lambdas: Option<Vec<f64>>,
    pub rf: Option<Vec<ForestParams>>,
}

/// How much of each level-0 pool is written under `models/`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaveModels {
    /// Every pool entry. Forest pools can get large.
    All,
    /// The newest entry of each pool plus a manifest of all entries.
    #[default]
    Final,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub version: u32,
    pub input_csv: PathBuf,
    pub output_dir: PathBuf,
    pub info_levels: Vec<InformationLevel>,
    pub methods: Vec<Method>,
    pub window: WindowConfig,
    pub test_span: TestSpan,
    pub seed: u64,
    pub cv_k: usize,
    pub grid: GridConfig,
    pub lr_tolerance: f64,
    pub lr_max_iters: usize,
    pub lr_solver: Solver,
    pub save_models: SaveModels,
}

const KEYS: [&str; 14] = [
    "version",
    "input_csv",
    "output_dir",
    "info_levels",
    "methods",
    "window",
    "test_span",
    "seed",
    "cv_k",
    "grid",
    "lr_tolerance",
    "lr_max_iters",
    "lr_solver",
    "save_models",
];

impl ExperimentConfig {
    /// Full experiment matrix with default settings.
    pub fn new(input_csv: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let lr = LogRegOptions::default();
        ExperimentConfig {
            version: CONFIG_VERSION,
            input_csv: input_csv.into(),
            output_dir: output_dir.into(),
            info_levels: InformationLevel::ALL.to_vec(),
            methods: Method::all(),
            window: WindowConfig::default(),
            test_span: TestSpan::default(),
            seed: 0,
            cv_k: 3,
            grid: GridConfig::default(),
            lr_tolerance: lr.tolerance,
            lr_max_iters: lr.max_iters,
            lr_solver: lr.solver,
            save_models: SaveModels::default(),
        }
    }

    /// Parses JSON. `version`, `input_csv` and `output_dir` are required;
    /// other keys default. Unknown keys are errors, listed together.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut unknown = match check_keys(&value, &KEYS) {
            Err(Error::UnknownKeys(keys)) => keys,
            other => other.map(|_| Vec::new())?,
        };
        let object = value.as_object().expect("checked to be an object");
        for (section, keys) in [
            ("window", &["window_months", "horizon_months", "threshold_hours"][..]),
            ("test_span", &["first", "last"][..]),
            ("grid", &["lr_lambdas", "rf"][..]),
        ] {
            if let Some(v) = object.get(section) {
                if let Err(Error::UnknownKeys(keys)) = check_keys(v, keys) {
                    unknown.extend(keys.into_iter().map(|k| format!("{section}.{k}")));
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        for required in ["version", "input_csv", "output_dir"] {
            if !object.contains_key(required) {
                return Err(Error::Config(format!("missing required key `{required}`")));
            }
        }
        let mut merged = serde_json::to_value(ExperimentConfig::new("", "")).expect("serializable");
        let target = merged.as_object_mut().expect("object");
        for (k, v) in object {
            if k == "window" {
                let window = target.get_mut("window").and_then(|w| w.as_object_mut()).expect("object");
                for (wk, wv) in v.as_object().ok_or_else(|| Error::Config("`window` must be an object".into()))? {
                    window.insert(wk.clone(), wv.clone());
                }
            } else {
                target.insert(k.clone(), v.clone());
            }
        }
        let config: ExperimentConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. Relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config =
            Self::from_json_str(&text).map_err(|e| e.context(format!("in {}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.input_csv, &mut config.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        if self.info_levels.is_empty() {
            return Err(Error::Config("info_levels is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods is empty".into()));
        }
        for (name, len, distinct) in [
            ("info_levels", self.info_levels.len(), {
                let mut v = self.info_levels.clone();
                v.sort();
                v.dedup();
                v.len()
            }),
            ("methods", self.methods.len(), {
                let mut v = self.methods.clone();
                v.sort();
                v.dedup();
                v.len()
            }),
        ] {
            if len != distinct {
                return Err(Error::Config(format!("{name} contains duplicates")));
            }
        }
        if self.cv_k < 2 {
            return Err(Error::Config(format!("cv_k must be at least 2, got {}", self.cv_k)));
        }
        if !(self.lr_tolerance > 0.0) {
            return Err(Error::Config("lr_tolerance must be positive".into()));
        }
        if let Some(l) = &self.grid.lr_lambdas {
            if l.is_empty() || l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Config("grid.lr_lambdas must be non-empty, finite and >= 0".into()));
            }
        }
        if let Some(rf) = &self.grid.rf {
            if rf.is_empty() {
                return Err(Error::Config("grid.rf is empty".into()));
            }
            for p in rf {
                p.validate()?;
            }
        }
        if let (Some(a), Some(b)) = (self.test_span.first, self.test_span.last) {
            if a > b {
                return Err(Error::Config(format!("test_span.first {a} is after test_span.last {b}")));
            }
        }
        self.window.validate()
    }

    pub fn tuner(&self) -> Tuner {
        Tuner {
            grid: HyperParamGrid {
                lr_lambdas: self.grid.lr_lambdas.clone().unwrap_or_else(lr_lambda_grid),
                rf: self.grid.rf.clone().unwrap_or_else(rf_param_grid),
            },
            k: self.cv_k,
            seed: self.seed,
            lr_options: LogRegOptions {
                tolerance: self.lr_tolerance,
                max_iters: self.lr_max_iters,
                solver: self.lr_solver,
            },
        }
    }
}

//! Experiment orchestration: config → ingest → rolling evaluation → result
//! files, plus weight inspection and synthetic data generation.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, GridConfig, SaveModels, TestSpan, CONFIG_VERSION};
pub use report::{
    averages, read_monthly, write_averages, write_best_per_level, write_level_series,
    write_monthly, AverageCell, MONTHLY_HEADER,
};
use report::{to_bytes, write_file};

use crate::cohort::{emit_csv, ingest_csv, Cohort, FeatureSchema, InformationLevel};
use crate::ensemble::{Level0Pool, TrainedModel};
use crate::error::{Error, Result};
use crate::evaluation::{rolling_protocol, MonthlyResult, ProtocolConfig, RollingOutcome};
use crate::learners::Model;
use crate::month::MonthIndex;
use crate::synth::{generate_cohort, SyntheticConfig};

pub const MONTHLY_CSV: &str = "monthly.csv";
pub const AVERAGES_CSV: &str = "averages.csv";
pub const FIG1_CSV: &str = "figures/fig1_series.csv";
pub const FIG2_CSV: &str = "figures/fig2_series.csv";
pub const META_JSON: &str = "meta.json";
pub const MODELS_DIR: &str = "models";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub results: Vec<MonthlyResult>,
    pub averages: Vec<AverageCell>,
    pub config: ExperimentConfig,
    pub wall_clock_secs: f64,
    pub seed: u64,
}

impl RunReport {
    pub fn average(&self, method: &str, level: InformationLevel) -> Option<f64> {
        self.averages
            .iter()
            .find(|c| c.method.to_string() == method && c.level == level)
            .and_then(|c| c.auc)
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    crate_version: &'static str,
    wall_clock_secs: f64,
    completed: bool,
    levels_completed: Vec<InformationLevel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolManifestEntry {
    pub trained_at: MonthIndex,
    pub params: crate::learners::HyperParams,
    /// Path of the serialized model relative to the pool directory, when saved.
    pub file: Option<String>,
}

/// Runs every configured (method, level) cell and writes the result files to
/// `config.output_dir`. When a cell fails, results gathered so far are still
/// written before the error is returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let records = ingest_csv(&config.input_csv)?;
    let cohort = Cohort::from_records(&records, config.window)?;
    drop(records);
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    if config.save_models != SaveModels::None {
        let schema = serde_json::to_vec_pretty(&cohort.schema).expect("schema is serializable");
        write_file(&out.join(MODELS_DIR).join("schema.json"), &schema)?;
    }

    let mut results: Vec<MonthlyResult> = Vec::new();
    let mut done = Vec::new();
    let tuner = config.tuner();
    for &level in &config.info_levels {
        let protocol = ProtocolConfig {
            level,
            methods: config.methods.clone(),
            first_test: config.test_span.first,
            last_test: config.test_span.last,
            tuner: tuner.clone(),
        };
        match rolling_protocol(&cohort, &protocol) {
            Ok(outcome) => {
                if config.save_models != SaveModels::None {
                    save_models(&out.join(MODELS_DIR), level, &outcome, config.save_models)?;
                }
                results.extend(outcome.results);
                done.push(level);
            }
            Err(e) => {
                let secs = started.elapsed().as_secs_f64();
                // Best effort: the original error matters more than a failed flush.
                let _ = write_outputs(config, &results, &done, secs, false);
                return Err(e);
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    write_outputs(config, &results, &done, secs, true)?;
    Ok(RunReport {
        averages: averages(&results),
        results,
        config: config.clone(),
        wall_clock_secs: secs,
        seed: config.seed,
    })
}

fn write_outputs(
    config: &ExperimentConfig,
    results: &[MonthlyResult],
    done: &[InformationLevel],
    secs: f64,
    completed: bool,
) -> Result<()> {
    let out = &config.output_dir;
    write_file(&out.join(MONTHLY_CSV), &to_bytes(|b| write_monthly(results, b))?)?;
    let cells = averages(results);
    write_file(&out.join(AVERAGES_CSV), &to_bytes(|b| write_averages(&cells, b))?)?;
    // The first figure follows the richest configured level.
    if let Some(level) = config.info_levels.iter().max() {
        write_file(&out.join(FIG1_CSV), &to_bytes(|b| write_level_series(results, *level, b))?)?;
    }
    write_file(&out.join(FIG2_CSV), &to_bytes(|b| write_best_per_level(results, b))?)?;
    let meta = Meta {
        config,
        seed: config.seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        wall_clock_secs: secs,
        completed,
        levels_completed: done.to_vec(),
    };
    write_file(&out.join(META_JSON), &serde_json::to_vec_pretty(&meta).expect("serializable"))
}

fn save_models(dir: &Path, level: InformationLevel, outcome: &RollingOutcome, save: SaveModels) -> Result<()> {
    let level_dir = dir.join(level.to_string());
    for ((family, variant), pool) in &outcome.pools {
        let pool_dir = level_dir.join(format!("{}_{}", family.short_name().to_lowercase(), variant.short_name()));
        let manifest = save_pool(&pool_dir, pool, save)?;
        write_file(&pool_dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest).expect("serializable"))?;
    }
    for (method, ensemble) in &outcome.ensembles {
        let name = method.to_string().replace(['+', ':'], "_");
        let members: Vec<serde_json::Value> = ensemble
            .pool
            .entries
            .iter()
            .map(|e| serde_json::json!({ "trained_at": e.trained_at, "variant": e.variant }))
            .collect();
        let doc = serde_json::json!({
            "method": method,
            "composition": ensemble.composition,
            "level1_params": ensemble.level1_params,
            "level1": ensemble.level1,
            "pool": members,
        });
        write_file(
            &level_dir.join("stacked").join(format!("{name}.json")),
            &serde_json::to_vec_pretty(&doc).expect("serializable"),
        )?;
    }
    Ok(())
}

fn save_pool(pool_dir: &Path, pool: &Level0Pool, save: SaveModels) -> Result<Vec<PoolManifestEntry>> {
    let last = pool.entries.len().saturating_sub(1);
    let mut manifest = Vec::with_capacity(pool.entries.len());
    for (i, entry) in pool.entries.iter().enumerate() {
        let keep = save == SaveModels::All || i == last;
        let file = keep.then(|| format!("{}.json", entry.trained_at));
        if let Some(f) = &file {
            let json = serde_json::to_vec(&*entry.model).expect("model is serializable");
            write_file(&pool_dir.join(f), &json)?;
        }
        manifest.push(PoolManifestEntry {
            trained_at: entry.trained_at,
            params: entry.model.params,
            file,
        });
    }
    Ok(manifest)
}

/// Re-aggregates `monthly.csv` in `dir` and rewrites `averages.csv` next to it.
pub fn report(dir: &Path) -> Result<Vec<AverageCell>> {
    let monthly = dir.join(MONTHLY_CSV);
    let file = std::fs::File::open(&monthly).map_err(|e| Error::io(&monthly, e))?;
    let results = read_monthly(file).map_err(|e| e.context(monthly.display().to_string()))?;
    let cells = averages(&results);
    write_file(&dir.join(AVERAGES_CSV), &to_bytes(|b| write_averages(&cells, b))?)?;
    Ok(cells)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::json(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    read_json(path)
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema> {
    read_json(path)
}

/// Feature names with absolute standardized weights, largest first; ties
/// keep feature order.
pub fn inspect_weights(model: &TrainedModel, schema: &FeatureSchema) -> Result<Vec<(String, f64)>> {
    let Model::Linear(linear) = &model.model else {
        return Err(Error::WeightsUndefinedForForest);
    };
    let names = schema.level_feature_names(model.level);
    if names.len() != linear.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: names.len(),
            got: linear.weights.len(),
        });
    }
    let mut ranked: Vec<(String, f64)> = names
        .into_iter()
        .zip(linear.weights.iter().map(|w| w.abs()))
        .collect();
    // Stable sort keeps index order among equal weights.
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

/// Sidecar metadata path for a generated CSV: `<csv>.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

/// Generates a synthetic cohort and writes it to `out_csv`, with the config
/// (seed included) echoed to the sidecar file.
pub fn generate_command(config: &SyntheticConfig, out_csv: &Path) -> Result<usize> {
    let records = generate_cohort(config)?;
    if let Some(parent) = out_csv.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    emit_csv(&records, out_csv)?;
    let meta = serde_json::json!({
        "seed": config.seed,
        "n_records": records.len(),
        "config": config,
        "crate_version": env!("CARGO_PKG_VERSION"),
    });
    let path = sidecar_path(out_csv);
    write_file(&path, &serde_json::to_vec_pretty(&meta).expect("serializable"))?;
    Ok(records.len())
}

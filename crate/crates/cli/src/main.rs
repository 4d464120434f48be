use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use homecare_core::evaluation::Method;
use homecare_core::runner::{
    generate_command, inspect_weights, load_model, load_schema, report, run_experiment,
    ExperimentConfig, AVERAGES_CSV, MODELS_DIR, MONTHLY_CSV,
};
use homecare_core::synth::SyntheticConfig;
use homecare_core::{Error, InformationLevel, Result};

#[derive(Parser)]
#[command(name = "homecare", version, about = "Predict large increases in home-care hours")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort CSV and a `<csv>.meta.json` sidecar.
    Generate {
        /// Generator config (JSON). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_citizens: Option<usize>,
    },
    /// Run the rolling monthly evaluation described by an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated methods, e.g. `baseline_3m,LR_all,RF+LR:from_1`.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Comma-separated information levels, e.g. `IL1,IL4`.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<String>>,
    },
    /// Recompute averages.csv from monthly.csv in a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Rank a saved logistic-regression model's features by absolute weight.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// Feature schema; by default the `schema.json` of the enclosing
        /// models directory.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        top: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            config,
            out,
            seed,
            n_citizens,
        } => {
            let mut cfg = match config {
                Some(path) => SyntheticConfig::load(path)?,
                None => SyntheticConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(n) = n_citizens {
                cfg.n_citizens = n;
            }
            cfg.validate()?;
            let n = generate_command(&cfg, &out)?;
            println!("wrote {n} records for {} citizens to {}", cfg.n_citizens, out.display());
        }
        Command::Run {
            config,
            out,
            seed,
            methods,
            levels,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(methods) = methods {
                cfg.methods = methods.iter().map(|m| m.parse::<Method>()).collect::<Result<_>>()?;
            }
            if let Some(levels) = levels {
                cfg.info_levels = levels
                    .iter()
                    .map(|l| l.parse::<InformationLevel>())
                    .collect::<Result<_>>()?;
            }
            let run = run_experiment(&cfg)?;
            println!(
                "{} monthly results in {:.1}s; wrote {} and {} to {}",
                run.results.len(),
                run.wall_clock_secs,
                MONTHLY_CSV,
                AVERAGES_CSV,
                cfg.output_dir.display()
            );
        }
        Command::Report { dir } => {
            let cells = report(&dir)?;
            for c in cells {
                let auc = c.auc.map_or("-".to_string(), |a| format!("{a:.4}"));
                println!("{:<22} {:<5} {auc} ({} months)", c.method.to_string(), c.level.to_string(), c.months);
            }
        }
        Command::Inspect { model, schema, top } => {
            let schema_path = match schema {
                Some(p) => p,
                None => find_schema(&model)?,
            };
            let trained = load_model(&model)?;
            let schema = load_schema(&schema_path)?;
            let ranked = inspect_weights(&trained, &schema)?;
            let n = top.unwrap_or(ranked.len());
            for (name, weight) in ranked.into_iter().take(n) {
                println!("{name}\t{weight:.6}");
            }
        }
    }
    Ok(())
}

/// Walks up from `model` to the directory holding `schema.json`.
fn find_schema(model: &Path) -> Result<PathBuf> {
    model
        .ancestors()
        .skip(1)
        .map(|dir| dir.join("schema.json"))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            Error::Config(format!(
                "no schema.json above {}; pass --schema (runs write it to {MODELS_DIR}/schema.json)",
                model.display()
            ))
        })
}

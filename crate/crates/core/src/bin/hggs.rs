use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use hggs_core::harness::{
    self, compare, load_results, resolve_cache_root, DatasetCache, ExperimentConfig,
};
use hggs_core::ode_lab::{LabelingConfig, SystemId};
use hggs_core::Result;

#[derive(Parser)]
#[command(
    name = "hggs",
    version,
    about = "Sampling experiments for oscillatory ODE surrogates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled LHS dataset (CSV plus provenance sidecar).
    Generate {
        #[arg(long, value_parser = parse_system)]
        system: SystemId,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run every (method, seed) cell of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dataset cache root; overrides the environment and the config.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Cells run concurrently.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build comparison tables and plot data from a result directory.
    Compare {
        result_dir: PathBuf,
        /// Output directory; defaults to the result directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_system(s: &str) -> std::result::Result<SystemId, String> {
    s.parse::<SystemId>().map_err(|_| {
        let names: Vec<&str> = SystemId::ALL.iter().map(|s| s.name()).collect();
        format!(
            "unknown system `{s}` (expected one of: {})",
            names.join(", ")
        )
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate {
            system,
            n,
            seed,
            out,
            workers,
        } => {
            let ds = harness::generate_dataset(
                system,
                n,
                seed,
                &LabelingConfig::for_system(system),
                workers,
            )?;
            ds.save(&out)?;
            info!(
                "wrote {} samples to {} ({} integration failures)",
                ds.len(),
                out.display(),
                ds.provenance.failure_count
            );
            Ok(true)
        }
        Command::Run {
            config,
            out,
            cache,
            workers,
            seed,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let cache = DatasetCache::new(resolve_cache_root(
                cache.as_deref(),
                cfg.cache_dir.as_deref(),
            ));
            let summary = harness::run_experiment(&cfg, &out, &cache, workers)?;
            info!(
                "{} cells done, {} failed; cache {} hits / {} misses; results in {}",
                summary.results.len(),
                summary.failures.len(),
                summary.cache_hits,
                summary.cache_misses,
                out.display()
            );
            Ok(summary.failures.is_empty())
        }
        Command::Compare { result_dir, out } => {
            let results = load_results(&result_dir)?;
            let out = out.unwrap_or_else(|| result_dir.clone());
            for p in compare(&results, &out)? {
                info!("wrote {}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}

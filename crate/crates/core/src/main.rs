use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hypwave::experiment::{run, ExperimentConfig, Subcommand};

/// Semiclassical Lagrangian-state lab on the Bolza surface.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// TOML experiment file; defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(Subcommand::NAMES))]
    subcommand: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &Args) -> hypwave::Result<bool> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let subcommand: Subcommand = args.subcommand.parse()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| hypwave::Error::Config(format!("thread pool: {e}")))?;
    let artifact = pool.install(|| run(&cfg, subcommand))?;
    artifact.write(&args.out)?;
    for r in &artifact.reports {
        let (stat, threshold) = r.primary_values();
        log::info!(
            "{:<32} {:<12} statistic={} threshold={}",
            r.name,
            r.verdict.as_str(),
            stat.map_or("-".into(), |v| format!("{v:.4e}")),
            threshold.map_or("-".into(), |v| format!("{v:.4e}")),
        );
    }
    for w in &artifact.manifest.warnings {
        log::warn!("{w}");
    }
    log::info!("artifacts written to {}", args.out.display());
    Ok(artifact.all_passed())
}

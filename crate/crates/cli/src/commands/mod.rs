mod compare;
mod pipeline;
mod probe;
mod steps;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::Common;

pub use compare::compare;
pub use probe::probe;
pub use steps::{generate, pretrain, select, train_eval};

/// Environment variable capping worker threads.
pub const THREADS_VAR: &str = "REDOR_THREADS";

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Environment name.
    #[arg(long)]
    pub env: Option<String>,
    /// Expert trajectory count.
    #[arg(long)]
    pub expert: Option<usize>,
    /// Random trajectory count (tripled by `--hard`).
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint count `T`.
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    /// redor, random, prioritized, top_return or full.
    #[arg(long)]
    pub method: String,
    /// Subset size for baselines.
    #[arg(long)]
    pub size: Option<usize>,
    /// Checkpoint directory written by `pretrain`.
    #[arg(long)]
    pub checkpoints: Option<PathBuf>,
    /// Selection rounds; must not exceed the checkpoint count.
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainEvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Selection file written by `select`.
    #[arg(long)]
    pub selection: PathBuf,
    /// Steps between evaluation points.
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Method to compare; repeat for several. Replaces the configured list.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    /// Baseline subset size when `redor` is not among the methods.
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Probe family or `all`.
    #[arg(long, default_value = "all")]
    pub name: String,
}

/// Loads the config file and applies the shared flag overrides.
fn resolve(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if !common.seeds.is_empty() {
        cfg.run.seeds = common.seeds.clone();
    }
    if let Some(out) = &common.out {
        cfg.run.out = out.clone();
    }
    if let Some(d) = &common.dataset {
        cfg.run.dataset = Some(d.clone());
    }
    if common.hard {
        cfg.env.hard = true;
    }
    if let Some(s) = common.steps {
        cfg.train.steps = s;
    }
    if let Some(h) = common.hidden {
        cfg.train.hidden = h;
    }
    Ok(cfg)
}

fn single_seed(cfg: &RunConfig) -> CliResult<u64> {
    match cfg.run.seeds.as_slice() {
        [s] => Ok(*s),
        other => Err(CliError::Usage(format!(
            "this command takes one seed, got {}",
            other.len()
        ))),
    }
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    let dir = cfg.run.out.as_path();
    if !dir.is_dir() {
        return Err(CliError::Usage(format!(
            "output directory {} does not exist",
            dir.display()
        )));
    }
    Ok(dir)
}

fn require_dataset(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.run
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::Usage("--dataset is required".into()))
}

fn existing(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

/// Worker cap from `REDOR_THREADS`, defaulting to the available cores.
fn worker_count() -> CliResult<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!(
                "{THREADS_VAR} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Writes through a sibling temporary file so failures leave no partial output.
fn write_atomic(path: &Path, text: &str) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).and_then(|_| fs::rename(&tmp, path)).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::Runtime(format!("cannot write {}: {e}", path.display()))
    })
}

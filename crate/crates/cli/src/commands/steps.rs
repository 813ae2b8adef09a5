//! The single-step subcommands.

use redor::agent::CheckpointStore;
use redor::envdata::dataset_to_string;
use redor::selector::{read_selection, selection_to_string};

use super::pipeline::{self, load_dataset, pretrain_store, select_subset, train_eval_run, upsert_metrics, write_store};
use super::{
    existing, out_dir, require_dataset, resolve, single_seed, worker_count, write_atomic, GenerateArgs, PretrainArgs,
    SelectArgs, TrainEvalArgs,
};
use crate::config::METHODS;
use crate::error::{CliError, CliResult};

pub fn generate(args: GenerateArgs) -> CliResult<()> {
    let mut cfg = resolve(&args.common)?;
    if let Some(e) = args.env {
        cfg.env.name = e;
    }
    if let Some(n) = args.expert {
        cfg.env.expert = n;
    }
    if let Some(n) = args.random {
        cfg.env.random = n;
    }
    if !args.common.seeds.is_empty() {
        cfg.env.data_seed = single_seed(&cfg)?;
    }
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    let ds = pipeline::generate(&cfg, cfg.env.data_seed)?;
    let path = dir.join("dataset.jsonl");
    write_atomic(&path, &dataset_to_string(&ds))?;
    println!(
        "wrote {} trajectories ({} transitions) to {}",
        ds.len(),
        ds.transition_count(),
        path.display()
    );
    Ok(())
}

pub fn pretrain(args: PretrainArgs) -> CliResult<()> {
    let mut cfg = resolve(&args.common)?;
    // for this command `--steps` sets the pretraining length
    if let Some(s) = args.common.steps {
        cfg.select.pretrain_steps = s;
    }
    if let Some(t) = args.rounds {
        cfg.select.rounds = t;
    }
    cfg.validate()?;
    let seed = single_seed(&cfg)?;
    let dir = out_dir(&cfg)?;
    let ds = load_dataset(require_dataset(&cfg)?)?;
    let store = pretrain_store(&ds, &cfg, cfg.select.rounds, seed)?;
    write_store(&store, dir)?;
    println!(
        "wrote {} checkpoints over {} steps to {}",
        store.len(),
        cfg.select.pretrain_steps,
        dir.display()
    );
    Ok(())
}

pub fn select(args: SelectArgs) -> CliResult<()> {
    let mut cfg = resolve(&args.common)?;
    if !METHODS.contains(&args.method.as_str()) {
        return Err(CliError::Usage(format!(
            "unknown method `{}`; valid: {}",
            args.method,
            METHODS.join(", ")
        )));
    }
    let store = match &args.checkpoints {
        Some(p) => {
            existing(p, "checkpoint directory")?;
            Some(CheckpointStore::read_dir(p)?)
        }
        None => None,
    };
    // one round per stored checkpoint unless overridden
    if let Some(t) = args
        .rounds
        .or(store.as_ref().map(CheckpointStore::len).filter(|&n| n > 0))
    {
        cfg.select.rounds = t;
        cfg.select.pretrain_steps = cfg.select.pretrain_steps.max(t);
    }
    cfg.validate()?;
    let seed = single_seed(&cfg)?;
    let dir = out_dir(&cfg)?;
    let ds = load_dataset(require_dataset(&cfg)?)?;
    let (file, wall_ms) = select_subset(
        &ds,
        &cfg,
        &args.method,
        args.size,
        store.as_ref(),
        seed,
        worker_count()?,
    )?;
    let path = dir.join(format!("{}.selection.jsonl", file.method));
    write_atomic(&path, &selection_to_string(&file))?;
    println!(
        "method={} size={} fraction={:.4} wall_time_ms={:.1}",
        file.method,
        file.ids.len(),
        file.ids.len() as f64 / ds.len() as f64,
        wall_ms
    );
    for r in &file.rounds {
        let last = r.residuals.last().copied().unwrap_or(f64::NAN);
        println!("round {}: picked {} final_residual={last:.6e}", r.round, r.ids.len());
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn train_eval(args: TrainEvalArgs) -> CliResult<()> {
    let mut cfg = resolve(&args.common)?;
    if let Some(e) = args.eval_every {
        cfg.compare.eval_every = e;
    }
    cfg.validate()?;
    existing(&args.selection, "selection file")?;
    let dir = out_dir(&cfg)?;
    let ds = load_dataset(require_dataset(&cfg)?)?;
    let sel = read_selection(&args.selection)?;
    let mut rows = Vec::new();
    for &seed in &cfg.run.seeds {
        // the selection time is only known to the process that selected
        rows.extend(train_eval_run(&ds, &sel, &cfg, seed, 0.0)?);
    }
    let path = dir.join("metrics.csv");
    for r in rows.iter().filter(|r| r.step == cfg.train.steps) {
        println!("method={} seed={} final_return={:.4}", r.method, r.seed, r.mean_return);
    }
    let n = rows.len();
    upsert_metrics(&path, rows)?;
    println!("wrote {n} rows to {}", path.display());
    Ok(())
}

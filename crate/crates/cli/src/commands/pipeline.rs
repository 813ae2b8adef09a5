//! Building blocks shared by the single-step commands and `compare`.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use redor::agent::{evaluate, train, train_with_hook, CheckpointStore, TrainingView};
use redor::analysis::{metrics_to_string, parse_metrics, MetricsRow};
use redor::envdata::{generate_dataset, read_dataset, EnvSpec, OfflineDataset};
use redor::selector::{baseline_select, redor_with_threads, BaselineMethod, SelectionFile};

use super::write_atomic;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn load_dataset(path: &Path) -> CliResult<OfflineDataset> {
    Ok(read_dataset(path)?)
}

pub fn generate(cfg: &RunConfig, seed: u64) -> CliResult<OfflineDataset> {
    let env = EnvSpec::by_name(&cfg.env.name)?;
    Ok(generate_dataset(&env, &cfg.env.mix(), cfg.env.gamma, seed)?)
}

/// The configured dataset file, or a fresh one from `[env]`.
pub fn dataset_for(cfg: &RunConfig) -> CliResult<OfflineDataset> {
    match &cfg.run.dataset {
        Some(p) => load_dataset(p),
        None => generate(cfg, cfg.env.data_seed),
    }
}

/// Full-data training that snapshots `rounds` checkpoints.
pub fn pretrain_store(ds: &OfflineDataset, cfg: &RunConfig, rounds: usize, seed: u64) -> CliResult<CheckpointStore> {
    let out = train(&TrainingView::full(ds), &cfg.pretrain_config(), seed, Some(rounds))?;
    Ok(out.checkpoints.expect("checkpoints were requested"))
}

/// Removes checkpoint files from `dir` so a rerun with fewer rounds leaves
/// no stale snapshots behind.
pub fn clear_checkpoints(dir: &Path) -> CliResult<()> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Runtime(format!("cannot list {}: {e}", dir.display())))?;
    for entry in entries.flatten() {
        let path = entry.path();
        if path.to_string_lossy().ends_with(".ckpt.jsonl") {
            fs::remove_file(&path).map_err(|e| CliError::Runtime(format!("cannot remove {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

pub fn write_store(store: &CheckpointStore, dir: &Path) -> CliResult<()> {
    clear_checkpoints(dir)?;
    for (round, params) in store.iter() {
        let path = dir.join(CheckpointStore::file_name(round));
        write_atomic(&path, &redor::agent::checkpoint_to_string(round, params))?;
    }
    Ok(())
}

/// Selection by `method` plus its wall time in milliseconds.
pub fn select_subset(
    ds: &OfflineDataset,
    cfg: &RunConfig,
    method: &str,
    size: Option<usize>,
    store: Option<&CheckpointStore>,
    seed: u64,
    threads: usize,
) -> CliResult<(SelectionFile, f64)> {
    let needs_store = || store.ok_or_else(|| CliError::Usage(format!("method {method} needs --checkpoints")));
    let start = Instant::now();
    let file = if method == "redor" {
        let store = needs_store()?;
        let sc = cfg.select.selector_config(ds.len(), seed);
        let out = redor_with_threads(ds, store, &sc, threads)?;
        SelectionFile {
            method: method.to_string(),
            trajectory_count: ds.len(),
            config: Some(sc),
            ids: out.ids,
            weights: out.weights,
            rounds: out.rounds,
        }
    } else {
        let kind = BaselineMethod::from_str(method)?;
        let size = match kind {
            BaselineMethod::Full => ds.len(),
            _ => size.ok_or_else(|| CliError::Usage(format!("method {method} needs --size")))?,
        };
        let params = match kind {
            BaselineMethod::Prioritized => {
                let store = needs_store()?;
                let last = *store
                    .rounds()
                    .last()
                    .ok_or_else(|| CliError::Runtime("checkpoint store is empty".into()))?;
                Some(store.get(last)?)
            }
            _ => None,
        };
        let sel = baseline_select(ds, kind, size, params, seed)?;
        SelectionFile {
            method: kind.name().to_string(),
            trajectory_count: ds.len(),
            config: None,
            ids: sel.ids,
            weights: sel.weights,
            rounds: Vec::new(),
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    file.validate()?;
    Ok((file, wall_ms))
}

/// Start states for evaluation depend only on the training seed, so every
/// method is scored on the same episodes.
pub fn eval_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_e7a1_0000_0000
}

/// Trains on the selection and evaluates every `eval_every` steps and at the
/// final step.
pub fn train_eval_run(
    ds: &OfflineDataset,
    sel: &SelectionFile,
    cfg: &RunConfig,
    seed: u64,
    wall_ms: f64,
) -> CliResult<Vec<MetricsRow>> {
    if sel.trajectory_count != ds.len() {
        return Err(CliError::Usage(format!(
            "selection was made for {} trajectories but the dataset has {}",
            sel.trajectory_count,
            ds.len()
        )));
    }
    let view = TrainingView::weighted(ds, sel.ids.clone(), sel.weights.clone());
    let every = cfg.compare.eval_every;
    let total = cfg.train.steps;
    let episodes = cfg.compare.eval_episodes;
    let mut rows = Vec::new();
    train_with_hook(&view, &cfg.train, seed, None, |step, params| {
        if step % every == 0 || step == total {
            let stats = evaluate(params, &ds.env, episodes, eval_seed(seed))?;
            rows.push(MetricsRow {
                method: sel.method.clone(),
                seed,
                step,
                mean_return: stats.mean,
                std_return: stats.std,
                subset_size: sel.ids.len(),
                subset_fraction: sel.ids.len() as f64 / ds.len() as f64,
                selection_wall_time_ms: wall_ms,
            });
        }
        Ok(())
    })?;
    Ok(rows)
}

/// Replaces rows of the same `(method, seed)` in `path` and keeps the file
/// sorted by method, seed and step.
pub fn upsert_metrics(path: &Path, rows: Vec<MetricsRow>) -> CliResult<()> {
    let mut all = if path.exists() {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        parse_metrics(&text)?
    } else {
        Vec::new()
    };
    all.retain(|old| !rows.iter().any(|r| r.method == old.method && r.seed == old.seed));
    all.extend(rows);
    all.sort_by(|a, b| (&a.method, a.seed, a.step).cmp(&(&b.method, b.seed, b.step)));
    write_atomic(path, &metrics_to_string(&all)?)
}

/// Applies `f` to every item on up to `threads` workers; results keep item
/// order and the first error by position wins.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<(usize, CliResult<R>)>> = Mutex::new(Vec::with_capacity(items.len()));
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                done.lock().expect("worker panicked").push((i, r));
            });
        }
    });
    let mut done = done.into_inner().expect("worker panicked");
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, r)| r).collect()
}

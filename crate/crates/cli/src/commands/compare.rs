//! Every configured method over every seed, then a per-method summary.

use std::fmt::Write as _;
use std::fs;

use redor::agent::CheckpointStore;
use redor::analysis::{metrics_to_string, MetricsRow};
use redor::envdata::dataset_to_string;
use redor::selector::{selection_to_string, SelectionFile};

use super::pipeline::{dataset_for, parallel_map, pretrain_store, select_subset, train_eval_run};
use super::{out_dir, resolve, worker_count, write_atomic, CompareArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Summary of one method across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub seeds: usize,
    pub mean_final_return: f64,
    /// Population standard deviation over seeds.
    pub std_final_return: f64,
    pub mean_subset_size: f64,
    pub mean_selection_wall_time_ms: f64,
}

pub const SUMMARY_HEADER: &str =
    "method,seeds,mean_final_return,std_final_return,mean_subset_size,mean_selection_wall_time_ms";

/// Aggregates the last evaluation point of each `(method, seed)` run, in
/// `methods` order.
pub fn summarize(rows: &[MetricsRow], methods: &[String]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for m in methods {
        let mut finals: Vec<&MetricsRow> = Vec::new();
        for r in rows.iter().filter(|r| &r.method == m) {
            match finals.iter_mut().find(|f| f.seed == r.seed) {
                Some(f) if f.step < r.step => *f = r,
                Some(_) => {}
                None => finals.push(r),
            }
        }
        if finals.is_empty() {
            continue;
        }
        let n = finals.len() as f64;
        let mean = finals.iter().map(|r| r.mean_return).sum::<f64>() / n;
        let var = finals.iter().map(|r| (r.mean_return - mean).powi(2)).sum::<f64>() / n;
        out.push(SummaryRow {
            method: m.clone(),
            seeds: finals.len(),
            mean_final_return: mean,
            std_final_return: var.sqrt(),
            mean_subset_size: finals.iter().map(|r| r.subset_size as f64).sum::<f64>() / n,
            mean_selection_wall_time_ms: finals.iter().map(|r| r.selection_wall_time_ms).sum::<f64>() / n,
        });
    }
    out
}

pub fn summary_to_string(rows: &[SummaryRow]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.method,
            r.seeds,
            r.mean_final_return,
            r.std_final_return,
            r.mean_subset_size,
            r.mean_selection_wall_time_ms
        );
    }
    s
}

/// Selections of one seed, in configured method order, with wall times.
struct SeedSelections {
    seed: u64,
    picks: Vec<(SelectionFile, f64)>,
}

fn baseline_size(cfg: &RunConfig, redor_size: Option<usize>) -> Option<usize> {
    redor_size.or(cfg.compare.size)
}

fn select_for_seed(ds: &redor::envdata::OfflineDataset, cfg: &RunConfig, seed: u64) -> CliResult<SeedSelections> {
    let methods = &cfg.compare.methods;
    let needs_store = methods.iter().any(|m| m == "redor" || m == "prioritized");
    let store: Option<CheckpointStore> = if needs_store {
        Some(pretrain_store(ds, cfg, cfg.select.rounds, seed)?)
    } else {
        None
    };
    // the pursuit runs first so baselines can match its subset size
    let mut redor_pick = None;
    if methods.iter().any(|m| m == "redor") {
        redor_pick = Some(select_subset(ds, cfg, "redor", None, store.as_ref(), seed, 1)?);
    }
    let size = baseline_size(cfg, redor_pick.as_ref().map(|(f, _)| f.ids.len()));
    let mut picks = Vec::with_capacity(methods.len());
    for m in methods {
        if m == "redor" {
            picks.push(redor_pick.clone().expect("pursuit selection ran"));
        } else {
            picks.push(select_subset(ds, cfg, m, size, store.as_ref(), seed, 1)?);
        }
    }
    Ok(SeedSelections { seed, picks })
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    let mut cfg = resolve(&args.common)?;
    if !args.methods.is_empty() {
        cfg.compare.methods = args.methods.clone();
    }
    if let Some(s) = args.size {
        cfg.compare.size = Some(s);
    }
    cfg.validate()?;
    let has_redor = cfg.compare.methods.iter().any(|m| m == "redor");
    let needs_size = cfg.compare.methods.iter().any(|m| m != "redor" && m != "full");
    if needs_size && !has_redor && cfg.compare.size.is_none() {
        return Err(CliError::Usage(
            "baselines without redor need --size or compare.size".into(),
        ));
    }
    let mut seen = Vec::new();
    for m in &cfg.compare.methods {
        if seen.contains(m) {
            return Err(CliError::Usage(format!("method `{m}` listed twice")));
        }
        seen.push(m.clone());
    }
    let dir = out_dir(&cfg)?.to_path_buf();
    let threads = worker_count()?;

    let ds = dataset_for(&cfg)?;
    if cfg.run.dataset.is_none() {
        write_atomic(&dir.join("dataset.jsonl"), &dataset_to_string(&ds))?;
    }

    let seeds = cfg.run.seeds.clone();
    let selections = parallel_map(&seeds, threads, |&seed| select_for_seed(&ds, &cfg, seed))?;

    let sel_dir = dir.join("selections");
    fs::create_dir_all(&sel_dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", sel_dir.display())))?;
    for s in &selections {
        for (file, _) in &s.picks {
            let path = sel_dir.join(format!("{}-seed{}.selection.jsonl", file.method, s.seed));
            write_atomic(&path, &selection_to_string(file))?;
        }
    }

    // cells ordered by method, then seed
    let mut cells: Vec<(&SelectionFile, f64, u64)> = Vec::new();
    for mi in 0..cfg.compare.methods.len() {
        for s in &selections {
            let (file, wall) = &s.picks[mi];
            cells.push((file, *wall, s.seed));
        }
    }
    let runs = parallel_map(&cells, threads, |&(file, wall, seed)| {
        train_eval_run(&ds, file, &cfg, seed, wall)
    })?;
    let rows: Vec<MetricsRow> = runs.into_iter().flatten().collect();
    write_atomic(&dir.join("metrics.csv"), &metrics_to_string(&rows)?)?;

    let summary = summarize(&rows, &cfg.compare.methods);
    write_atomic(&dir.join("summary.csv"), &summary_to_string(&summary))?;
    println!(
        "{:<12} {:>5} {:>12} {:>10} {:>8} {:>14}",
        "method", "seeds", "final_return", "std", "size", "select_ms"
    );
    for r in &summary {
        println!(
            "{:<12} {:>5} {:>12.4} {:>10.4} {:>8.1} {:>14.1}",
            r.method,
            r.seeds,
            r.mean_final_return,
            r.std_final_return,
            r.mean_subset_size,
            r.mean_selection_wall_time_ms
        );
    }
    println!(
        "wrote {} metrics rows to {}",
        rows.len(),
        dir.join("metrics.csv").display()
    );
    Ok(())
}

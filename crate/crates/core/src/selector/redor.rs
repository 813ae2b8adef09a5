//! Multi-round selection over stored checkpoints.

use std::collections::BTreeMap;
use std::thread;

use super::gradients::build_gradient_table;
use super::omp::{omp_select, Selection, SelectorConfig};
use crate::agent::CheckpointStore;
use crate::envdata::OfflineDataset;
use crate::error::{Error, Result};

/// The `⌈m·N/100⌉` highest-return trajectory ids, ascending.
pub fn top_return_filter(dataset: &OfflineDataset, top_percent: f64) -> Result<Vec<usize>> {
    if !(top_percent > 0.0 && top_percent <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "top percent must lie in (0, 100], got {top_percent}"
        )));
    }
    let n = dataset.len();
    // the small slack keeps exact products such as 50·4/100 from rounding up
    let keep = ((top_percent * n as f64 / 100.0 - 1e-9).ceil() as usize).clamp(1.min(n), n);
    Ok(top_by_score(
        dataset.trajectories.iter().map(|t| t.total_return()).collect(),
        keep,
    ))
}

/// Indices of the `keep` largest scores, ties to the lower index, ascending.
pub(crate) fn top_by_score(scores: Vec<f64>, keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ids = order[..keep.min(order.len())].to_vec();
    ids.sort_unstable();
    ids
}

/// Union of per-round selections with each weight averaged over the rounds
/// that picked the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RedorOutcome {
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
    pub rounds: Vec<Selection>,
}

pub fn merge_rounds(rounds: Vec<Selection>) -> RedorOutcome {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for sel in &rounds {
        for (&id, &w) in sel.ids.iter().zip(&sel.weights) {
            let e = acc.entry(id).or_insert((0.0, 0));
            e.0 += w;
            e.1 += 1;
        }
    }
    let (ids, weights) = acc.into_iter().map(|(id, (sum, n))| (id, sum / n as f64)).unzip();
    RedorOutcome { ids, weights, rounds }
}

/// One round: filter, gradients at checkpoint `round`, pursuit.
pub fn select_round(
    dataset: &OfflineDataset,
    store: &CheckpointStore,
    cfg: &SelectorConfig,
    round: usize,
) -> Result<Selection> {
    let params = store.get(round)?;
    let candidates = top_return_filter(dataset, cfg.top_percent)?;
    let table = build_gradient_table(dataset, &candidates, &params.critic, round)?;
    let round_cfg = SelectorConfig {
        budget: Some(cfg.budget_for(dataset.len())),
        ..cfg.clone()
    };
    omp_select(&table, &round_cfg)
}

pub fn redor(dataset: &OfflineDataset, store: &CheckpointStore, cfg: &SelectorConfig) -> Result<RedorOutcome> {
    redor_with_threads(dataset, store, cfg, 1)
}

/// Rounds are independent, so they may be spread over `threads` workers;
/// results are merged in round order and do not depend on the thread count.
pub fn redor_with_threads(
    dataset: &OfflineDataset,
    store: &CheckpointStore,
    cfg: &SelectorConfig,
    threads: usize,
) -> Result<RedorOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("dataset has no trajectories".into()));
    }
    for round in 1..=cfg.rounds {
        store.get(round)?;
    }
    let rounds: Vec<usize> = (1..=cfg.rounds).collect();
    let threads = threads.clamp(1, rounds.len());
    let selections: Vec<Selection> = if threads == 1 {
        rounds
            .iter()
            .map(|&r| select_round(dataset, store, cfg, r))
            .collect::<Result<_>>()?
    } else {
        let chunk = rounds.len().div_ceil(threads);
        let parts: Vec<Result<Vec<Selection>>> = thread::scope(|s| {
            let handles: Vec<_> = rounds
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        part.iter()
                            .map(|&r| select_round(dataset, store, cfg, r))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("selection worker panicked"))
                .collect()
        });
        let mut all = Vec::with_capacity(rounds.len());
        for part in parts {
            all.extend(part?);
        }
        all
    };
    Ok(merge_rounds(selections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envdata::{EnvSpec, Provenance, Trajectory};

    fn dataset_with_returns(returns: &[f64]) -> OfflineDataset {
        let mut env = EnvSpec::point_mass();
        env.horizon = 1;
        env.r_max = 10.0;
        let trajs = returns
            .iter()
            .map(|&r| {
                Trajectory::from_parts(vec![vec![0.0; 4]; 2], vec![vec![0.0; 2]], vec![r], vec![false], 0.99).unwrap()
            })
            .collect();
        OfflineDataset::new(
            env,
            0.99,
            trajs,
            Provenance {
                seed: 0,
                policy_mix: vec![],
            },
        )
        .unwrap()
    }

    #[test]
    fn filter_cases() {
        let ds = dataset_with_returns(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(top_return_filter(&ds, 50.0).unwrap(), vec![2, 3]);
        assert_eq!(top_return_filter(&ds, 100.0).unwrap(), vec![0, 1, 2, 3]);
        let ds = dataset_with_returns(&[5.0, 5.0, 1.0]);
        assert_eq!(top_return_filter(&ds, 50.0).unwrap(), vec![0, 1]);
        let ds = dataset_with_returns(&[5.0, 5.0, 5.0]);
        assert_eq!(top_return_filter(&ds, 34.0).unwrap(), vec![0, 1]);
        assert!(top_return_filter(&ds, 0.0).is_err());
        assert!(top_return_filter(&ds, 101.0).is_err());
    }

    fn sel(round: usize, ids: Vec<usize>, weights: Vec<f64>) -> Selection {
        Selection {
            round,
            ids,
            weights,
            residuals: vec![],
        }
    }

    #[test]
    fn merge_averages_weights() {
        let out = merge_rounds(vec![sel(1, vec![0], vec![2.0]), sel(2, vec![0, 1], vec![4.0, 1.0])]);
        assert_eq!(out.ids, vec![0, 1]);
        assert_eq!(out.weights, vec![3.0, 1.0]);
        assert_eq!(out.rounds.len(), 2);
    }

    #[test]
    fn merge_of_identical_rounds_is_idempotent() {
        let s = sel(1, vec![2, 5], vec![0.5, 1.5]);
        let out = merge_rounds(vec![s.clone(), s.clone(), s.clone()]);
        assert_eq!(out.ids, s.ids);
        assert_eq!(out.weights, s.weights);
    }
}

//! Reference subset rules with uniform weights.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::omp::Selection;
use super::redor::top_by_score;
use crate::agent::{critic_inputs, td_targets, AgentParams};
use crate::envdata::{OfflineDataset, Transition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    Random,
    Prioritized,
    TopReturn,
    Full,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Prioritized => "prioritized",
            Self::TopReturn => "top_return",
            Self::Full => "full",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "prioritized" => Ok(Self::Prioritized),
            "top_return" | "top-return" => Ok(Self::TopReturn),
            "full" => Ok(Self::Full),
            other => Err(Error::InvalidArgument(format!("unknown selection method `{other}`"))),
        }
    }
}

/// Mean squared TD error of every step of trajectory `id`, using noise-free
/// target-network bootstraps.
pub fn trajectory_td_error(dataset: &OfflineDataset, id: usize, params: &AgentParams) -> Result<f64> {
    params.check_env(&dataset.env)?;
    let batch: Vec<&Transition> = dataset.trajectories[id].transitions().iter().collect();
    let noise = vec![0.0; batch.len() * params.act_dim()];
    let targets = td_targets(params, &batch, &noise, dataset.gamma)?;
    let rows: Vec<(&[f64], &[f64])> = batch
        .iter()
        .map(|t| (t.state.as_slice(), t.action.as_slice()))
        .collect();
    let q = params.critic.forward_batch(&critic_inputs(&rows), batch.len())?;
    let sum: f64 = targets.iter().zip(q.output()).map(|(y, q)| (y - q) * (y - q)).sum();
    Ok(sum / batch.len() as f64)
}

/// Uniformly weighted baseline subset; `params` is required for prioritized.
pub fn baseline_select(
    dataset: &OfflineDataset,
    method: BaselineMethod,
    size: usize,
    params: Option<&AgentParams>,
    seed: u64,
) -> Result<Selection> {
    let n = dataset.len();
    if method != BaselineMethod::Full && (size == 0 || size > n) {
        return Err(Error::InvalidArgument(format!(
            "subset size {size} out of range 1..={n}"
        )));
    }
    let ids = match method {
        BaselineMethod::Full => (0..n).collect(),
        BaselineMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ids = sample(&mut rng, n, size).into_vec();
            ids.sort_unstable();
            ids
        }
        BaselineMethod::TopReturn => {
            top_by_score(dataset.trajectories.iter().map(|t| t.total_return()).collect(), size)
        }
        BaselineMethod::Prioritized => {
            let params =
                params.ok_or_else(|| Error::InvalidArgument("prioritized selection needs agent parameters".into()))?;
            let scores = (0..n)
                .map(|id| trajectory_td_error(dataset, id, params))
                .collect::<Result<Vec<_>>>()?;
            top_by_score(scores, size)
        }
    };
    let weights = vec![1.0; ids.len()];
    Ok(Selection {
        round: 0,
        ids,
        weights,
        residuals: Vec::new(),
    })
}

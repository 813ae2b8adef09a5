use crate::agent::mc_critic_loss_grad;
use crate::envdata::{OfflineDataset, Transition};
use crate::error::{Error, Result};
use crate::numcore::{axpy, MlpParams};

/// Per-trajectory mean Monte-Carlo critic gradients at one checkpoint, plus
/// the full-dataset gradient they should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTable {
    pub round: usize,
    /// Trajectory ids, ascending.
    pub candidates: Vec<usize>,
    /// One vector per candidate, aligned with `candidates`.
    pub gradients: Vec<Vec<f64>>,
    pub full_gradient: Vec<f64>,
}

impl GradientTable {
    /// Builds a table from explicit vectors; candidates are re-sorted by id.
    pub fn new(
        round: usize,
        candidates: Vec<usize>,
        gradients: Vec<Vec<f64>>,
        full_gradient: Vec<f64>,
    ) -> Result<Self> {
        if candidates.len() != gradients.len() {
            return Err(Error::dim("gradient table rows", candidates.len(), gradients.len()));
        }
        let dim = full_gradient.len();
        if let Some(g) = gradients.iter().find(|g| g.len() != dim) {
            return Err(Error::dim("gradient table vector", dim, g.len()));
        }
        let mut rows: Vec<(usize, Vec<f64>)> = candidates.into_iter().zip(gradients).collect();
        rows.sort_by_key(|(id, _)| *id);
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(
                "duplicate candidate id in gradient table".into(),
            ));
        }
        let (candidates, gradients) = rows.into_iter().unzip();
        Ok(Self {
            round,
            candidates,
            gradients,
            full_gradient,
        })
    }

    pub fn dim(&self) -> usize {
        self.full_gradient.len()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Sub-table restricted to the first `n` candidates (by id).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            round: self.round,
            candidates: self.candidates[..n].to_vec(),
            gradients: self.gradients[..n].to_vec(),
            full_gradient: self.full_gradient.clone(),
        }
    }
}

/// Mean over the trajectory's steps of the gradient of `(G_t − Q_θ(s_t,a_t))²`.
pub fn trajectory_gradient(dataset: &OfflineDataset, id: usize, critic: &MlpParams) -> Result<Vec<f64>> {
    let traj = &dataset.trajectories[id];
    let steps: Vec<(&Transition, f64)> = traj
        .transitions()
        .iter()
        .zip(traj.returns_to_go())
        .map(|(t, g)| (t, *g))
        .collect();
    Ok(mc_critic_loss_grad(critic, &steps)?.grad)
}

/// Gradient table for `candidates`; the full gradient always spans all of `dataset`.
pub fn build_gradient_table(
    dataset: &OfflineDataset,
    candidates: &[usize],
    critic: &MlpParams,
    round: usize,
) -> Result<GradientTable> {
    let expected = dataset.env.obs_dim + dataset.env.act_dim;
    if critic.shape().input != expected || critic.shape().output != 1 {
        return Err(Error::dim("checkpoint critic input", expected, critic.shape().input));
    }
    if let Some(&bad) = candidates.iter().find(|&&c| c >= dataset.len()) {
        return Err(Error::InvalidArgument(format!("candidate id {bad} out of range")));
    }
    let dim = critic.param_count();
    let mut per_traj = Vec::with_capacity(dataset.len());
    let mut full = vec![0.0; dim];
    for id in 0..dataset.len() {
        let g = trajectory_gradient(dataset, id, critic)?;
        axpy(dataset.trajectories[id].len() as f64, &g, &mut full);
        per_traj.push(g);
    }
    let total = dataset.transition_count() as f64;
    for v in &mut full {
        *v /= total;
    }
    let gradients = candidates.iter().map(|&c| per_traj[c].clone()).collect();
    GradientTable::new(round, candidates.to_vec(), gradients, full)
}

//! Weighted TD3+BC training on a subset of trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::CheckpointStore;
use super::losses::{actor_loss_grad, td_critic_loss_grad};
use super::params::{AgentParams, TrainConfig};
use crate::envdata::{OfflineDataset, Transition};
use crate::error::{Error, Result};

/// Adam with the usual bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Trajectories to train on with one nonnegative weight each.
#[derive(Debug, Clone)]
pub struct TrainingView<'a> {
    pub dataset: &'a OfflineDataset,
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
}

impl<'a> TrainingView<'a> {
    pub fn full(dataset: &'a OfflineDataset) -> Self {
        Self::uniform(dataset, (0..dataset.len()).collect())
    }

    pub fn uniform(dataset: &'a OfflineDataset, ids: Vec<usize>) -> Self {
        let weights = vec![1.0; ids.len()];
        Self { dataset, ids, weights }
    }

    pub fn weighted(dataset: &'a OfflineDataset, ids: Vec<usize>, weights: Vec<f64>) -> Self {
        Self { dataset, ids, weights }
    }

    /// Positive-weight trajectories with weights rescaled to mean 1.
    fn normalized(&self) -> Result<Vec<(usize, f64)>> {
        if self.ids.len() != self.weights.len() {
            return Err(Error::dim("training view weights", self.ids.len(), self.weights.len()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "negative or non-finite trajectory weight {w}"
            )));
        }
        if let Some(&id) = self.ids.iter().find(|&&id| id >= self.dataset.len()) {
            return Err(Error::InvalidArgument(format!(
                "trajectory id {id} out of range for {} trajectories",
                self.dataset.len()
            )));
        }
        let kept: Vec<(usize, f64)> = self
            .ids
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .filter(|(_, w)| *w > 0.0)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidArgument(
                "training view has no positive-weight trajectory".into(),
            ));
        }
        if kept.iter().all(|(_, w)| *w == kept[0].1) {
            return Ok(kept.into_iter().map(|(id, _)| (id, 1.0)).collect());
        }
        let mean = kept.iter().map(|(_, w)| w).sum::<f64>() / kept.len() as f64;
        Ok(kept.into_iter().map(|(id, w)| (id, w / mean)).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub critic_losses: Vec<f64>,
    pub actor_losses: Vec<f64>,
    pub alpha_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: AgentParams,
    pub log: TrainLog,
    pub checkpoints: Option<CheckpointStore>,
}

/// Steps `⌈G·t/T⌉` for `t = 1..=T`.
pub fn checkpoint_steps(total_steps: usize, rounds: usize) -> Vec<usize> {
    (1..=rounds).map(|t| (total_steps * t).div_ceil(rounds)).collect()
}

pub fn train(
    view: &TrainingView<'_>,
    cfg: &TrainConfig,
    seed: u64,
    checkpoint_rounds: Option<usize>,
) -> Result<TrainOutcome> {
    train_with_hook(view, cfg, seed, checkpoint_rounds, |_, _| Ok(()))
}

/// Runs `cfg.steps` TD3+BC updates; `hook(step, params)` is called after every
/// step (1-based) and may abort training by returning an error.
pub fn train_with_hook<F>(
    view: &TrainingView<'_>,
    cfg: &TrainConfig,
    seed: u64,
    checkpoint_rounds: Option<usize>,
    mut hook: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &AgentParams) -> Result<()>,
{
    cfg.validate()?;
    let entries = view.normalized()?;
    let ds = view.dataset;

    let mut pool: Vec<(&Transition, f64)> = Vec::new();
    for &(id, w) in &entries {
        for t in ds.trajectories[id].transitions() {
            pool.push((t, w));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = AgentParams::init(&ds.env, cfg.hidden, &mut rng);
    let mut critic_opt = Adam::new(cfg.critic_lr, params.critic.param_count());
    let mut actor_opt = Adam::new(cfg.actor_lr, params.actor.param_count());

    let schedule = match checkpoint_rounds {
        Some(0) => return Err(Error::InvalidArgument("checkpoint rounds must be >= 1".into())),
        Some(t) => checkpoint_steps(cfg.steps, t),
        None => Vec::new(),
    };
    let mut store = checkpoint_rounds.map(|_| CheckpointStore::new());
    let mut next_round = 0;

    let mut log = TrainLog::default();
    let mut batch: Vec<&Transition> = Vec::with_capacity(cfg.batch_size);
    let mut weights: Vec<f64> = Vec::with_capacity(cfg.batch_size);

    for step in 1..=cfg.steps {
        batch.clear();
        weights.clear();
        for _ in 0..cfg.batch_size {
            let (t, w) = pool[rng.random_range(0..pool.len())];
            batch.push(t);
            weights.push(w);
        }

        let critic = td_critic_loss_grad(&params, &batch, Some(&weights), cfg, &mut rng)?;
        critic_opt.step(params.critic.as_mut_slice(), &critic.grad);
        log.critic_losses.push(critic.loss);

        if step % cfg.policy_delay == 0 {
            let actor = actor_loss_grad(&params, &batch, Some(&weights), cfg)?;
            actor_opt.step(params.actor.as_mut_slice(), &actor.grad);
            log.actor_losses.push(actor.loss);
            log.alpha_fallbacks += usize::from(actor.alpha_fallback);
            params.soft_update_targets(cfg.tau);
        }
        params.step = step as u64;

        if let Some(store) = store.as_mut() {
            while next_round < schedule.len() && schedule[next_round] == step {
                store.insert(next_round + 1, params.clone())?;
                next_round += 1;
            }
        }
        hook(step, &params)?;
    }
    if !params.critic.is_finite() || !params.actor.is_finite() {
        return Err(Error::Validation("training diverged to non-finite parameters".into()));
    }

    Ok(TrainOutcome {
        params,
        log,
        checkpoints: store,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envdata::{generate_dataset, EnvSpec, PolicyMix};

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            steps: 40,
            batch_size: 16,
            hidden: 8,
            ..TrainConfig::default()
        }
    }

    fn dataset() -> OfflineDataset {
        let mut env = EnvSpec::point_mass();
        env.horizon = 10;
        generate_dataset(
            &env,
            &[PolicyMix::new("expert", 3, 0.1), PolicyMix::new("random", 3, 1.0)],
            0.99,
            2,
        )
        .unwrap()
    }

    #[test]
    fn schedule_is_ceiling_spaced() {
        assert_eq!(checkpoint_steps(10, 3), vec![4, 7, 10]);
        assert_eq!(checkpoint_steps(10, 1), vec![10]);
        assert_eq!(checkpoint_steps(20000, 50).len(), 50);
    }

    #[test]
    fn masking_equals_single_trajectory() {
        let ds = dataset();
        let cfg = tiny_cfg();
        let mut w = vec![0.0; ds.len()];
        w[3] = 0.7;
        let masked = train(&TrainingView::weighted(&ds, (0..ds.len()).collect(), w), &cfg, 5, None).unwrap();
        let alone = train(&TrainingView::uniform(&ds, vec![3]), &cfg, 5, None).unwrap();
        assert_eq!(masked.params, alone.params);
    }

    #[test]
    fn constant_weights_equal_uniform() {
        let ds = dataset();
        let cfg = tiny_cfg();
        let ids: Vec<usize> = (0..ds.len()).collect();
        let uniform = train(&TrainingView::uniform(&ds, ids.clone()), &cfg, 9, None).unwrap();
        let scaled = train(
            &TrainingView::weighted(&ds, ids.clone(), vec![0.1; ids.len()]),
            &cfg,
            9,
            None,
        )
        .unwrap();
        assert_eq!(uniform.params, scaled.params);
        assert_eq!(uniform.log, scaled.log);
    }

    #[test]
    fn rejects_bad_views() {
        let ds = dataset();
        let cfg = tiny_cfg();
        assert!(train(&TrainingView::weighted(&ds, vec![0, 1], vec![1.0, -1.0]), &cfg, 0, None).is_err());
        assert!(train(&TrainingView::weighted(&ds, vec![0], vec![0.0]), &cfg, 0, None).is_err());
        assert!(train(&TrainingView::uniform(&ds, vec![]), &cfg, 0, None).is_err());
        assert!(train(&TrainingView::uniform(&ds, vec![99]), &cfg, 0, None).is_err());
    }

    #[test]
    fn checkpoints_follow_schedule_and_determinism() {
        let ds = dataset();
        let cfg = tiny_cfg();
        let a = train(&TrainingView::full(&ds), &cfg, 3, Some(4)).unwrap();
        let b = train(&TrainingView::full(&ds), &cfg, 3, Some(4)).unwrap();
        let store = a.checkpoints.unwrap();
        assert_eq!(store.rounds(), vec![1, 2, 3, 4]);
        let steps: Vec<u64> = store.iter().map(|(_, p)| p.step).collect();
        assert_eq!(steps, vec![10, 20, 30, 40]);
        assert_eq!(store.get(4).unwrap(), &a.params);
        assert_eq!(a.params, b.params);
    }
}

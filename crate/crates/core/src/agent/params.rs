use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envdata::EnvSpec;
use crate::error::{Error, Result};
use crate::numcore::{MlpParams, MlpShape, MlpTrace};

/// TD3+BC hyperparameters. Defaults follow the published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub policy_noise: f64,
    pub noise_clip: f64,
    pub kappa: f64,
    /// Gradient steps `G`.
    pub steps: usize,
    /// Critic steps per actor/target update.
    pub policy_delay: usize,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            critic_lr: 3e-4,
            actor_lr: 3e-4,
            batch_size: 256,
            gamma: 0.99,
            tau: 5e-3,
            policy_noise: 0.2,
            noise_clip: 0.5,
            kappa: 2.5,
            steps: 20_000,
            policy_delay: 2,
            hidden: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("critic_lr", self.critic_lr),
            ("actor_lr", self.actor_lr),
            ("tau", self.tau),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma > 1.0 || self.tau > 1.0 {
            return Err(Error::InvalidArgument("gamma and tau must not exceed 1".into()));
        }
        if self.policy_noise < 0.0 || self.noise_clip < 0.0 {
            return Err(Error::InvalidArgument(
                "policy noise settings must be nonnegative".into(),
            ));
        }
        if self.batch_size == 0 || self.policy_delay == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument(
                "batch_size, policy_delay and hidden must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Online and target networks of the actor-critic pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub critic: MlpParams,
    pub actor: MlpParams,
    pub critic_target: MlpParams,
    pub actor_target: MlpParams,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub step: u64,
}

/// Actor forward pass with the tanh squashing into the action box.
pub(crate) struct ActorPass {
    pub trace: MlpTrace,
    /// tanh of the raw outputs, row-major (batch × act_dim).
    pub tanh: Vec<f64>,
    pub actions: Vec<f64>,
}

impl AgentParams {
    pub fn init<R: Rng + ?Sized>(env: &EnvSpec, hidden: usize, rng: &mut R) -> Self {
        let critic = MlpParams::init(MlpShape::new(env.obs_dim + env.act_dim, hidden, 1), rng);
        let actor = MlpParams::init(MlpShape::new(env.obs_dim, hidden, env.act_dim), rng);
        Self {
            critic_target: critic.clone(),
            actor_target: actor.clone(),
            critic,
            actor,
            action_low: env.action_low.clone(),
            action_high: env.action_high.clone(),
            step: 0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.shape().input
    }

    pub fn act_dim(&self) -> usize {
        self.actor.shape().output
    }

    pub fn hidden(&self) -> usize {
        self.critic.shape().hidden
    }

    pub fn check_env(&self, env: &EnvSpec) -> Result<()> {
        if self.obs_dim() != env.obs_dim {
            return Err(Error::dim("agent obs_dim", env.obs_dim, self.obs_dim()));
        }
        if self.act_dim() != env.act_dim {
            return Err(Error::dim("agent act_dim", env.act_dim, self.act_dim()));
        }
        Ok(())
    }

    /// Deterministic action of the online actor.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.actor_pass(&self.actor, state, 1)?.actions)
    }

    pub fn q_value(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        let input = critic_inputs(&[(state, action)]);
        Ok(self.critic.forward(&input)?[0])
    }

    pub(crate) fn actor_pass(&self, actor: &MlpParams, states: &[f64], batch: usize) -> Result<ActorPass> {
        let trace = actor.forward_batch(states, batch)?;
        let act_dim = self.act_dim();
        let tanh: Vec<f64> = trace.output().iter().map(|z| z.tanh()).collect();
        let actions = tanh
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let (lo, hi) = (self.action_low[i % act_dim], self.action_high[i % act_dim]);
                0.5 * (lo + hi) + 0.5 * (hi - lo) * t
            })
            .collect();
        Ok(ActorPass { trace, tanh, actions })
    }

    pub(crate) fn half_range(&self, dim: usize) -> f64 {
        0.5 * (self.action_high[dim] - self.action_low[dim])
    }

    /// `target ← tau·online + (1 − tau)·target` for both networks.
    pub fn soft_update_targets(&mut self, tau: f64) {
        soft_update(self.critic_target.as_mut_slice(), self.critic.as_slice(), tau);
        soft_update(self.actor_target.as_mut_slice(), self.actor.as_slice(), tau);
    }
}

fn soft_update(target: &mut [f64], online: &[f64], tau: f64) {
    for (t, o) in target.iter_mut().zip(online) {
        *t = tau * o + (1.0 - tau) * *t;
    }
}

/// Row-major `[state ⊕ action]` rows for the critic.
pub(crate) fn critic_inputs(rows: &[(&[f64], &[f64])]) -> Vec<f64> {
    let width = rows.first().map_or(0, |(s, a)| s.len() + a.len());
    let mut out = Vec::with_capacity(rows.len() * width);
    for (s, a) in rows {
        out.extend_from_slice(s);
        out.extend_from_slice(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn actor_respects_bounds() {
        let mut env = EnvSpec::point_mass();
        env.action_low = vec![-0.5, 0.0];
        env.action_high = vec![0.5, 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = AgentParams::init(&env, 8, &mut rng);
        for v in agent.actor.as_mut_slice() {
            *v *= 50.0;
        }
        for k in 0..50 {
            let s = [k as f64 * 0.3 - 7.0, 1.0, -2.0, 4.0];
            let a = agent.act(&s).unwrap();
            assert!((-0.5..=0.5).contains(&a[0]) && (0.0..=3.0).contains(&a[1]), "{a:?}");
        }
    }

    #[test]
    fn soft_update_is_convex_combination() {
        let env = EnvSpec::point_mass();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = AgentParams::init(&env, 4, &mut rng);
        agent.critic = MlpParams::init(agent.critic.shape(), &mut rng);
        let before = agent.critic_target.clone();
        agent.soft_update_targets(0.25);
        for ((t, o), b) in agent
            .critic_target
            .as_slice()
            .iter()
            .zip(agent.critic.as_slice())
            .zip(before.as_slice())
        {
            assert_eq!(*t, 0.25 * o + 0.75 * b);
        }
    }

    #[test]
    fn default_config_is_valid() {
        TrainConfig::default().validate().unwrap();
        let bad = TrainConfig {
            kappa: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

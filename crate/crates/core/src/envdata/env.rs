//! Built-in toy continuous-control environments and scripted behavior policies.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const POINT_MASS: &str = "point-mass";
pub const DOUBLE_INTEGRATOR: &str = "double-integrator";

const DT: f64 = 0.1;
const POS_LIMIT: f64 = 2.0;
const VEL_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub horizon: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub r_max: f64,
}

impl EnvSpec {
    /// 2-D point mass: state = position ⊕ (goal − position), action = velocity.
    pub fn point_mass() -> Self {
        Self {
            name: POINT_MASS.to_string(),
            obs_dim: 4,
            act_dim: 2,
            horizon: 50,
            action_low: vec![-1.0; 2],
            action_high: vec![1.0; 2],
            r_max: 1.0,
        }
    }

    /// 1-D double integrator: state = (position, velocity, goal − position), action = force.
    pub fn double_integrator() -> Self {
        Self {
            name: DOUBLE_INTEGRATOR.to_string(),
            obs_dim: 3,
            act_dim: 1,
            horizon: 50,
            action_low: vec![-1.0],
            action_high: vec![1.0],
            r_max: 1.0,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            POINT_MASS => Ok(Self::point_mass()),
            DOUBLE_INTEGRATOR => Ok(Self::double_integrator()),
            other => Err(Error::InvalidArgument(format!(
                "unknown environment `{other}` (expected {POINT_MASS} or {DOUBLE_INTEGRATOR})"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.obs_dim == 0 || self.act_dim == 0 {
            return Err(Error::Validation(format!(
                "env `{}` needs horizon, obs_dim and act_dim >= 1",
                self.name
            )));
        }
        if self.action_low.len() != self.act_dim || self.action_high.len() != self.act_dim {
            return Err(Error::Validation(format!(
                "env `{}` action bounds must have act_dim = {} entries",
                self.name, self.act_dim
            )));
        }
        let bounds_ok = self
            .action_low
            .iter()
            .zip(&self.action_high)
            .all(|(l, h)| l.is_finite() && h.is_finite() && l < h);
        if !bounds_ok {
            return Err(Error::Validation(format!(
                "env `{}` has invalid action bounds",
                self.name
            )));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::Validation(format!("env `{}` needs r_max > 0", self.name)));
        }
        Ok(())
    }

    pub fn clip_action(&self, action: &mut [f64]) {
        for ((a, lo), hi) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(*lo, *hi);
        }
    }

    /// Samples a start state: random position and goal.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self.name.as_str() {
            POINT_MASS => {
                let pos = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let goal = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                Ok(vec![pos[0], pos[1], goal[0] - pos[0], goal[1] - pos[1]])
            }
            DOUBLE_INTEGRATOR => {
                let pos = rng.random_range(-1.0..1.0);
                let goal = rng.random_range(-1.0..1.0);
                Ok(vec![pos, 0.0, goal - pos])
            }
            other => Err(Error::InvalidArgument(format!("no dynamics for environment `{other}`"))),
        }
    }

    /// Deterministic transition. Returns `(next_state, reward, terminal)`; the
    /// action is clipped to the bounds first. Reward is `r_max·exp(−distance)` at
    /// the next state, so it lies in `(0, r_max]`.
    pub fn step(&self, state: &[f64], action: &[f64]) -> Result<(Vec<f64>, f64, bool)> {
        if state.len() != self.obs_dim {
            return Err(Error::dim("env step state", self.obs_dim, state.len()));
        }
        if action.len() != self.act_dim {
            return Err(Error::dim("env step action", self.act_dim, action.len()));
        }
        let mut a = action.to_vec();
        self.clip_action(&mut a);
        match self.name.as_str() {
            POINT_MASS => {
                let goal = [state[0] + state[2], state[1] + state[3]];
                let pos = [
                    (state[0] + DT * a[0]).clamp(-POS_LIMIT, POS_LIMIT),
                    (state[1] + DT * a[1]).clamp(-POS_LIMIT, POS_LIMIT),
                ];
                let off = [goal[0] - pos[0], goal[1] - pos[1]];
                let dist = (off[0] * off[0] + off[1] * off[1]).sqrt();
                Ok((vec![pos[0], pos[1], off[0], off[1]], self.r_max * (-dist).exp(), false))
            }
            DOUBLE_INTEGRATOR => {
                let goal = state[0] + state[2];
                let vel = (state[1] + DT * a[0]).clamp(-VEL_LIMIT, VEL_LIMIT);
                let pos = (state[0] + DT * vel).clamp(-POS_LIMIT, POS_LIMIT);
                let off = goal - pos;
                Ok((vec![pos, vel, off], self.r_max * (-off.abs()).exp(), false))
            }
            other => Err(Error::InvalidArgument(format!("no dynamics for environment `{other}`"))),
        }
    }
}

/// Scripted data-collection policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorPolicy {
    /// Proportional (point mass) or PD (double integrator) controller toward the
    /// goal plus Gaussian noise with std = noise scale.
    Expert,
    /// Uniform actions over `noise scale × [low, high]`.
    Random,
}

impl BehaviorPolicy {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "expert" => Ok(Self::Expert),
            "random" => Ok(Self::Random),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Expert => "expert",
            Self::Random => "random",
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, env: &EnvSpec, state: &[f64], noise: f64, rng: &mut R) -> Vec<f64> {
        let mut action = match self {
            Self::Expert => {
                let mut a = expert_action(env, state);
                if noise > 0.0 {
                    let normal = Normal::new(0.0, noise).expect("finite positive std");
                    for v in &mut a {
                        *v += normal.sample(rng);
                    }
                }
                a
            }
            Self::Random => env
                .action_low
                .iter()
                .zip(&env.action_high)
                .map(|(lo, hi)| {
                    let mid = 0.5 * (lo + hi);
                    let half = 0.5 * (hi - lo) * noise.clamp(0.0, 1.0);
                    if half > 0.0 {
                        rng.random_range(mid - half..mid + half)
                    } else {
                        mid
                    }
                })
                .collect(),
        };
        env.clip_action(&mut action);
        action
    }
}

fn expert_action(env: &EnvSpec, state: &[f64]) -> Vec<f64> {
    match env.name.as_str() {
        DOUBLE_INTEGRATOR => vec![4.0 * state[2] - 3.0 * state[1]],
        // goal offset lives in the trailing act_dim entries
        _ => state[env.obs_dim - env.act_dim..].iter().map(|o| 10.0 * o).collect(),
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::{BehaviorPolicy, EnvSpec};
use crate::error::{Error, Result};

/// `Σ_k γ^k r_k`; empty input sums to zero.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Discounted suffix sums, one backward pass.
pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[t] = acc;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    transitions: Vec<Transition>,
    total_return: f64,
    returns_to_go: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from `K+1` chained states and `K` actions/rewards/flags.
    pub fn from_parts(
        states: Vec<Vec<f64>>,
        actions: Vec<Vec<f64>>,
        rewards: Vec<f64>,
        terminals: Vec<bool>,
        gamma: f64,
    ) -> Result<Self> {
        let k = rewards.len();
        if k == 0 {
            return Err(Error::Validation("trajectory needs at least one transition".into()));
        }
        if states.len() != k + 1 || actions.len() != k || terminals.len() != k {
            return Err(Error::Validation(format!(
                "trajectory with {k} rewards needs {} states, {k} actions and {k} terminal flags \
                 (got {}, {}, {})",
                k + 1,
                states.len(),
                actions.len(),
                terminals.len()
            )));
        }
        let transitions = (0..k)
            .map(|t| Transition {
                state: states[t].clone(),
                action: actions[t].clone(),
                reward: rewards[t],
                next_state: states[t + 1].clone(),
                terminal: terminals[t],
            })
            .collect();
        Self::from_transitions(transitions, gamma)
    }

    pub fn from_transitions(transitions: Vec<Transition>, gamma: f64) -> Result<Self> {
        if transitions.is_empty() {
            return Err(Error::Validation("trajectory needs at least one transition".into()));
        }
        for (t, pair) in transitions.windows(2).enumerate() {
            if pair[0].next_state != pair[1].state {
                return Err(Error::Validation(format!(
                    "transition {t} does not chain into {}",
                    t + 1
                )));
            }
        }
        let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
        let returns_to_go = returns_to_go(&rewards, gamma);
        Ok(Self {
            total_return: returns_to_go[0],
            transitions,
            returns_to_go,
        })
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn total_return(&self) -> f64 {
        self.total_return
    }

    pub fn returns_to_go(&self) -> &[f64] {
        &self.returns_to_go
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    /// `s_0 … s_K`.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.transitions.iter().map(|t| t.state.clone()).collect();
        out.push(self.transitions.last().expect("nonempty").next_state.clone());
        out
    }

    /// Undiscounted reward sum.
    pub fn undiscounted_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMix {
    pub policy: String,
    pub count: usize,
    pub noise: f64,
}

impl PolicyMix {
    pub fn new(policy: &str, count: usize, noise: f64) -> Self {
        Self {
            policy: policy.to_string(),
            count,
            noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub policy_mix: Vec<PolicyMix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineDataset {
    pub env: EnvSpec,
    pub gamma: f64,
    pub trajectories: Vec<Trajectory>,
    pub provenance: Provenance,
}

impl OfflineDataset {
    pub fn new(env: EnvSpec, gamma: f64, trajectories: Vec<Trajectory>, provenance: Provenance) -> Result<Self> {
        let ds = Self {
            env,
            gamma,
            trajectories,
            provenance,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Validation(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.trajectories.is_empty() {
            return Err(Error::Validation("dataset needs at least one trajectory".into()));
        }
        for (i, traj) in self.trajectories.iter().enumerate() {
            for (t, tr) in traj.transitions().iter().enumerate() {
                let bad = if tr.state.len() != self.env.obs_dim {
                    Some(("state", self.env.obs_dim, tr.state.len()))
                } else if tr.next_state.len() != self.env.obs_dim {
                    Some(("next_state", self.env.obs_dim, tr.next_state.len()))
                } else if tr.action.len() != self.env.act_dim {
                    Some(("action", self.env.act_dim, tr.action.len()))
                } else {
                    None
                };
                if let Some((what, want, got)) = bad {
                    return Err(Error::Validation(format!(
                        "trajectory {i} step {t}: {what} has length {got}, expected {want}"
                    )));
                }
                if !(tr.reward >= 0.0 && tr.reward <= self.env.r_max) {
                    return Err(Error::Validation(format!(
                        "trajectory {i} step {t}: reward {} outside [0, {}]",
                        tr.reward, self.env.r_max
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rolls out the policy mix in order from one seeded generator.
pub fn generate_dataset(env: &EnvSpec, mix: &[PolicyMix], gamma: f64, seed: u64) -> Result<OfflineDataset> {
    env.validate()?;
    let policies = mix
        .iter()
        .map(|m| BehaviorPolicy::parse(&m.policy))
        .collect::<Result<Vec<_>>>()?;
    if mix.iter().map(|m| m.count).sum::<usize>() == 0 {
        return Err(Error::InvalidArgument("policy mix yields no trajectories".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::new();
    for (m, policy) in mix.iter().zip(&policies) {
        for _ in 0..m.count {
            let mut state = env.reset(&mut rng)?;
            let mut transitions = Vec::with_capacity(env.horizon);
            for _ in 0..env.horizon {
                let action = policy.act(env, &state, m.noise, &mut rng);
                let (next, reward, terminal) = env.step(&state, &action)?;
                transitions.push(Transition {
                    state: std::mem::replace(&mut state, next.clone()),
                    action,
                    reward,
                    next_state: next,
                    terminal,
                });
                if terminal {
                    break;
                }
            }
            trajectories.push(Trajectory::from_transitions(transitions, gamma)?);
        }
    }
    OfflineDataset::new(
        env.clone(),
        gamma,
        trajectories,
        Provenance {
            seed,
            policy_mix: mix.to_vec(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn discounted_return_cases() {
        assert_eq!(discounted_return(&[], 0.9), 0.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
        // 2 + 4·0.99³
        let direct = 2.0 + 4.0 * 0.99f64.powi(3);
        assert!((direct - 5.881196).abs() < 1e-12);
        assert!((discounted_return(&[2.0, 0.0, 0.0, 4.0], 0.99) - 5.881196).abs() < 1e-12);
    }

    #[test]
    fn returns_to_go_cases() {
        assert_eq!(returns_to_go(&[1.0, 2.0, 3.0], 1.0), vec![6.0, 5.0, 3.0]);
        assert_eq!(returns_to_go(&[0.7], 0.3), vec![0.7]);
        assert_eq!(returns_to_go(&[1.0, 1.0], 0.5), vec![1.5, 1.0]);
    }

    proptest! {
        #[test]
        fn returns_to_go_match_suffix_sums(
            rewards in prop::collection::vec(0.0f64..1.0, 0..60),
            gamma in 0.01f64..=1.0,
        ) {
            let fast = returns_to_go(&rewards, gamma);
            for t in 0..rewards.len() {
                let brute: f64 = rewards[t..].iter().enumerate().map(|(k, r)| gamma.powi(k as i32) * r).sum();
                prop_assert!((fast[t] - brute).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn count_contract() {
        let mut env = EnvSpec::point_mass();
        env.horizon = 5;
        let mix = [PolicyMix::new("expert", 0, 0.0), PolicyMix::new("random", 1, 1.0)];
        let ds = generate_dataset(&env, &mix, 0.99, 3).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.trajectories[0].len(), 5);
    }

    #[test]
    fn generated_trajectories_chain_and_satisfy_invariants() {
        for seed in 0..5 {
            for env in [EnvSpec::point_mass(), EnvSpec::double_integrator()] {
                let mix = [PolicyMix::new("expert", 3, 0.1), PolicyMix::new("random", 3, 1.0)];
                let ds = generate_dataset(&env, &mix, 0.99, seed).unwrap();
                for traj in &ds.trajectories {
                    for pair in traj.transitions().windows(2) {
                        assert_eq!(pair[0].next_state, pair[1].state);
                    }
                    assert_eq!(traj.total_return(), traj.returns_to_go()[0]);
                    assert_eq!(traj.returns_to_go(), returns_to_go(&traj.rewards(), 0.99).as_slice());
                }
            }
        }
    }

    #[test]
    fn expert_beats_random() {
        let env = EnvSpec::point_mass();
        let mix = [PolicyMix::new("expert", 50, 0.1), PolicyMix::new("random", 50, 1.0)];
        let ds = generate_dataset(&env, &mix, 0.99, 11).unwrap();
        let mean = |r: std::ops::Range<usize>| {
            let n = r.len() as f64;
            r.map(|i| ds.trajectories[i].total_return()).sum::<f64>() / n
        };
        assert!(mean(0..50) > mean(50..100));
    }

    #[test]
    fn unknown_policy_and_empty_mix() {
        let env = EnvSpec::point_mass();
        assert!(matches!(
            generate_dataset(&env, &[PolicyMix::new("oracle", 1, 0.0)], 0.99, 0),
            Err(Error::UnknownPolicy(_))
        ));
        assert!(generate_dataset(&env, &[PolicyMix::new("expert", 0, 0.0)], 0.99, 0).is_err());
    }

    #[test]
    fn broken_chain_rejected() {
        let t0 = Transition {
            state: vec![0.0],
            action: vec![0.0],
            reward: 0.5,
            next_state: vec![1.0],
            terminal: false,
        };
        let mut t1 = t0.clone();
        t1.state = vec![2.0];
        assert!(Trajectory::from_transitions(vec![t0, t1], 0.9).is_err());
    }
}

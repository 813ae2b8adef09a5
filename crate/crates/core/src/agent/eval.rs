use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::AgentParams;
use crate::envdata::EnvSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    /// Population standard deviation over episodes.
    pub std: f64,
    pub returns: Vec<f64>,
}

/// Undiscounted return of the deterministic actor from `start`.
pub fn rollout(agent: &AgentParams, env: &EnvSpec, start: &[f64]) -> Result<f64> {
    let mut state = start.to_vec();
    let mut total = 0.0;
    for _ in 0..env.horizon {
        let action = agent.act(&state)?;
        let (next, reward, terminal) = env.step(&state, &action)?;
        total += reward;
        state = next;
        if terminal {
            break;
        }
    }
    Ok(total)
}

/// Mean and std of `episodes` undiscounted returns from seeded start states.
pub fn evaluate(agent: &AgentParams, env: &EnvSpec, episodes: usize, seed: u64) -> Result<EvalStats> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one episode".into()));
    }
    agent.check_env(env)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..episodes).map(|_| env.reset(&mut rng)).collect::<Result<_>>()?;
    let returns: Vec<f64> = starts.iter().map(|s| rollout(agent, env, s)).collect::<Result<_>>()?;
    Ok(stats(returns))
}

pub(crate) fn stats(returns: Vec<f64>) -> EvalStats {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    EvalStats {
        mean,
        std: var.sqrt(),
        returns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::MlpParams;

    fn zero_actor(env: &EnvSpec) -> AgentParams {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut agent = AgentParams::init(env, 8, &mut rng);
        agent.actor = MlpParams::zeros(agent.actor.shape());
        agent
    }

    #[test]
    fn zero_action_at_goal_collects_full_reward() {
        let env = EnvSpec::point_mass();
        let ret = rollout(&zero_actor(&env), &env, &[0.4, -0.3, 0.0, 0.0]).unwrap();
        assert_eq!(ret, env.horizon as f64 * env.r_max);
        assert_eq!(ret, 50.0);
    }

    #[test]
    fn single_episode_has_zero_std_and_is_deterministic() {
        let env = EnvSpec::point_mass();
        let agent = zero_actor(&env);
        let one = evaluate(&agent, &env, 1, 4).unwrap();
        assert_eq!(one.std, 0.0);
        assert_eq!(
            evaluate(&agent, &env, 10, 4).unwrap(),
            evaluate(&agent, &env, 10, 4).unwrap()
        );
        assert!(evaluate(&agent, &env, 0, 4).is_err());
    }
}

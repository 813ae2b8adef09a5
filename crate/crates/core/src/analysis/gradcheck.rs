//! Central finite-difference checks of the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{named, ProbeReport, Relation};
use crate::agent::{actor_loss_grad, mc_critic_loss_grad, td_critic_loss_grad, AgentParams, TrainConfig};
use crate::envdata::{generate_dataset, EnvSpec, PolicyMix, Transition};
use crate::error::Result;
use crate::numcore::{distance, norm2};

pub const FD_STEP: f64 = 1e-6;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Central differences of `f` around `x`.
pub fn finite_difference<F>(x: &[f64], step: f64, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let up = f(&probe)?;
        probe[i] = x[i] - step;
        let down = f(&probe)?;
        probe[i] = x[i];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-8)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    distance(analytic, numeric) / norm2(analytic).max(norm2(numeric)).max(1e-8)
}

fn report(name: &str, seed: u64, width: usize, analytic: &[f64], numeric: &[f64]) -> ProbeReport {
    let err = relative_error(analytic, numeric);
    ProbeReport::new(
        name,
        format!("seed={seed} width={width} params={}", analytic.len()),
        named(&[("analytic_norm", norm2(analytic)), ("numeric_norm", norm2(numeric))]),
        err,
        Relation::AtMost,
        FD_TOLERANCE,
        0.0,
    )
}

/// Compares the TD critic, Monte-Carlo critic and actor gradients with
/// central differences on a random small network and batch.
pub fn gradient_check(seed: u64, width: usize) -> Result<Vec<ProbeReport>> {
    let mut env = EnvSpec::point_mass();
    env.horizon = 6;
    let ds = generate_dataset(
        &env,
        &[PolicyMix::new("expert", 2, 0.3), PolicyMix::new("random", 2, 1.0)],
        0.9,
        seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let mut agent = AgentParams::init(&env, width, &mut rng);
    // targets differ from the online nets so bootstraps are nontrivial
    agent.critic_target = AgentParams::init(&env, width, &mut rng).critic;
    agent.actor_target = AgentParams::init(&env, width, &mut rng).actor;

    let batch: Vec<&Transition> = ds
        .trajectories
        .iter()
        .flat_map(|t| t.transitions().iter().take(3))
        .collect();
    let weights: Vec<f64> = (0..batch.len()).map(|_| rng.random_range(0.1..2.0)).collect();
    let cfg = TrainConfig {
        hidden: width,
        ..TrainConfig::default()
    };
    let noise_seed: u64 = rng.random();
    let mut out = Vec::new();

    let td = td_critic_loss_grad(
        &agent,
        &batch,
        Some(&weights),
        &cfg,
        &mut ChaCha8Rng::seed_from_u64(noise_seed),
    )?;
    let base = agent.critic.flatten();
    let fd = finite_difference(&base, FD_STEP, |theta| {
        let mut p = agent.clone();
        p.critic.as_mut_slice().copy_from_slice(theta);
        Ok(td_critic_loss_grad(
            &p,
            &batch,
            Some(&weights),
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(noise_seed),
        )?
        .loss)
    })?;
    out.push(report("gradient_td_critic", seed, width, &td.grad, &fd));

    let steps: Vec<(&Transition, f64)> = ds
        .trajectories
        .iter()
        .flat_map(|t| t.transitions().iter().zip(t.returns_to_go().iter().copied()).take(3))
        .collect();
    let mc = mc_critic_loss_grad(&agent.critic, &steps)?;
    let fd = finite_difference(&base, FD_STEP, |theta| {
        let mut c = agent.critic.clone();
        c.as_mut_slice().copy_from_slice(theta);
        Ok(mc_critic_loss_grad(&c, &steps)?.loss)
    })?;
    out.push(report("gradient_mc_critic", seed, width, &mc.grad, &fd));

    let actor = actor_loss_grad(&agent, &batch, Some(&weights), &cfg)?;
    let base = agent.actor.flatten();
    let fd = finite_difference(&base, FD_STEP, |phi| {
        let mut p = agent.clone();
        p.actor.as_mut_slice().copy_from_slice(phi);
        Ok(actor_loss_grad(&p, &batch, Some(&weights), &cfg)?.loss)
    })?;
    out.push(report("gradient_actor", seed, width, &actor.grad, &fd));
    Ok(out)
}

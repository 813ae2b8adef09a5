//! Critic and actor losses with analytic parameter gradients.
//!
//! All losses are weighted batch means `(1/B)·Σ w_i ℓ_i`; passing `None` for
//! the weights means `w_i = 1`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::{critic_inputs, AgentParams, TrainConfig};
use crate::envdata::Transition;
use crate::error::{Error, Result};
use crate::numcore::MlpParams;

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorLossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// `E|Q(s,a)| / κ` over the batch, treated as a constant.
    pub alpha: f64,
    /// Set when every `Q(s,a)` was zero and `alpha` fell back to 1.
    pub alpha_fallback: bool,
}

fn check_weights(weights: Option<&[f64]>, batch: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != batch {
            return Err(Error::dim("loss weights", batch, w.len()));
        }
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("loss weights must be nonnegative".into()));
        }
    }
    Ok(())
}

fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// Weighted mean squared error of `Q_θ(s,a)` against fixed targets.
/// `inputs` holds row-major `[s ⊕ a]` rows.
pub fn q_regression_loss_grad(
    critic: &MlpParams,
    inputs: &[f64],
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<LossGrad> {
    let batch = targets.len();
    if batch == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    check_weights(weights, batch)?;
    let trace = critic.forward_batch(inputs, batch)?;
    let q = trace.output();
    let n = batch as f64;
    let mut loss = 0.0;
    let mut dq = vec![0.0; batch];
    for i in 0..batch {
        let w = weight(weights, i);
        let r = q[i] - targets[i];
        loss += w * r * r;
        dq[i] = 2.0 * w * r / n;
    }
    let (grad, _) = critic.backward_batch(&trace, &dq)?;
    Ok(LossGrad { loss: loss / n, grad })
}

/// Clipped Gaussian target-policy noise, row-major (batch × act_dim), already
/// scaled to each action dimension's half range.
pub fn sample_target_noise<R: Rng + ?Sized>(
    params: &AgentParams,
    batch: usize,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Vec<f64> {
    let act_dim = params.act_dim();
    let normal = (cfg.policy_noise > 0.0).then(|| Normal::new(0.0, cfg.policy_noise).expect("finite std"));
    (0..batch * act_dim)
        .map(|i| {
            let eps = normal.as_ref().map_or(0.0, |n| n.sample(rng));
            eps.clamp(-cfg.noise_clip, cfg.noise_clip) * params.half_range(i % act_dim)
        })
        .collect()
}

/// `y = r + γ·(1 − done)·Q_θ'(s', clip(π_φ'(s') + ε))` from the frozen target networks.
pub fn td_targets(params: &AgentParams, batch: &[&Transition], noise: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let n = batch.len();
    let act_dim = params.act_dim();
    if noise.len() != n * act_dim {
        return Err(Error::dim("target noise", n * act_dim, noise.len()));
    }
    let next_states: Vec<f64> = batch.iter().flat_map(|t| t.next_state.iter().copied()).collect();
    let pass = params.actor_pass(&params.actor_target, &next_states, n)?;
    let mut next_actions = pass.actions;
    for (i, a) in next_actions.iter_mut().enumerate() {
        let d = i % act_dim;
        *a = (*a + noise[i]).clamp(params.action_low[d], params.action_high[d]);
    }
    let rows: Vec<(&[f64], &[f64])> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| (t.next_state.as_slice(), &next_actions[i * act_dim..(i + 1) * act_dim]))
        .collect();
    let q_next = params.critic_target.forward_batch(&critic_inputs(&rows), n)?;
    Ok(batch
        .iter()
        .zip(q_next.output())
        .map(|(t, q)| t.reward + if t.terminal { 0.0 } else { gamma * q })
        .collect())
}

fn transition_inputs(batch: &[&Transition]) -> Vec<f64> {
    let rows: Vec<(&[f64], &[f64])> = batch
        .iter()
        .map(|t| (t.state.as_slice(), t.action.as_slice()))
        .collect();
    critic_inputs(&rows)
}

/// TD critic loss `mean w·(y − Q_θ(s,a))²` with bootstrapped targets and
/// clipped policy noise drawn from `rng`.
pub fn td_critic_loss_grad<R: Rng + ?Sized>(
    params: &AgentParams,
    batch: &[&Transition],
    weights: Option<&[f64]>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let noise = sample_target_noise(params, batch.len(), cfg, rng);
    let targets = td_targets(params, batch, &noise, cfg.gamma)?;
    q_regression_loss_grad(&params.critic, &transition_inputs(batch), &targets, weights)
}

/// Monte-Carlo critic loss `mean (G_t − Q_θ(s_t,a_t))²` against returns-to-go.
pub fn mc_critic_loss_grad(critic: &MlpParams, steps: &[(&Transition, f64)]) -> Result<LossGrad> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("empty step list".into()));
    }
    let rows: Vec<(&[f64], &[f64])> = steps
        .iter()
        .map(|(t, _)| (t.state.as_slice(), t.action.as_slice()))
        .collect();
    let targets: Vec<f64> = steps.iter().map(|(_, g)| *g).collect();
    q_regression_loss_grad(critic, &critic_inputs(&rows), &targets, None)
}

/// TD3+BC actor loss `mean w·(−Q_θ(s, π_φ(s))/α + ‖π_φ(s) − a‖²)` with
/// `α = E|Q_θ(s,a)|/κ` held constant.
pub fn actor_loss_grad(
    params: &AgentParams,
    batch: &[&Transition],
    weights: Option<&[f64]>,
    cfg: &TrainConfig,
) -> Result<ActorLossGrad> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    check_weights(weights, n)?;
    let obs_dim = params.obs_dim();
    let act_dim = params.act_dim();

    let q_data = params.critic.forward_batch(&transition_inputs(batch), n)?;
    let mean_abs_q = q_data.output().iter().map(|q| q.abs()).sum::<f64>() / n as f64;
    let (alpha, alpha_fallback) = if mean_abs_q > 0.0 {
        (mean_abs_q / cfg.kappa, false)
    } else {
        (1.0, true)
    };

    let states: Vec<f64> = batch.iter().flat_map(|t| t.state.iter().copied()).collect();
    let pass = params.actor_pass(&params.actor, &states, n)?;
    let rows: Vec<(&[f64], &[f64])> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| (t.state.as_slice(), &pass.actions[i * act_dim..(i + 1) * act_dim]))
        .collect();
    let q_pi = params.critic.forward_batch(&critic_inputs(&rows), n)?;

    let nf = n as f64;
    let mut loss = 0.0;
    let mut dq = vec![0.0; n];
    for i in 0..n {
        let w = weight(weights, i);
        let bc: f64 = (0..act_dim)
            .map(|d| {
                let diff = pass.actions[i * act_dim + d] - batch[i].action[d];
                diff * diff
            })
            .sum();
        loss += w * (-q_pi.output()[i] / alpha + bc);
        dq[i] = -w / (alpha * nf);
    }
    let (_, dinput) = params.critic.backward_batch(&q_pi, &dq)?;

    // d loss / d raw actor output, through a = mid + half·tanh(z)
    let width = obs_dim + act_dim;
    let mut dz = vec![0.0; n * act_dim];
    for i in 0..n {
        let w = weight(weights, i);
        for d in 0..act_dim {
            let k = i * act_dim + d;
            let da = dinput[i * width + obs_dim + d] + 2.0 * w * (pass.actions[k] - batch[i].action[d]) / nf;
            let t = pass.tanh[k];
            dz[k] = da * params.half_range(d) * (1.0 - t * t);
        }
    }
    let (grad, _) = params.actor.backward_batch(&pass.trace, &dz)?;
    Ok(ActorLossGrad {
        loss: loss / nf,
        grad,
        alpha,
        alpha_fallback,
    })
}

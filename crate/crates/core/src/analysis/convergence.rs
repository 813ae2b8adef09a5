use super::report::{named, ProbeReport, Relation};
use crate::agent::mc_critic_loss_grad;
use crate::envdata::{OfflineDataset, Transition};
use crate::error::{Error, Result};
use crate::numcore::{axpy, distance, norm2, MlpParams};
use crate::selector::trajectory_gradient;

/// Per-step record of gradient descent driven by a weighted subset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceLog {
    /// Full-dataset loss `L(θ_t)` before step `t`.
    pub losses: Vec<f64>,
    /// Flattened critic parameters `θ_t`.
    pub params: Vec<Vec<f64>>,
    /// `‖Σ w_i ∇L_i(θ_t) − ∇L(θ_t)‖`.
    pub approx_errors: Vec<f64>,
    /// `‖∇L(θ_t)‖`.
    pub grad_norms: Vec<f64>,
}

/// Best-loss parameters seen along a reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumProxy {
    pub params: Vec<f64>,
    pub loss: f64,
}

/// Checks `min_t L(θ_t) ≤ L(θ*) + Dσ/√G + (D/G)·Σ_t ε_t` with
/// `D = max_t ‖θ* − θ_t‖` and `σ = max_t ‖∇L(θ_t)‖`.
pub fn convergence_bound_check(log: &ConvergenceLog, optimum: &OptimumProxy) -> Result<ProbeReport> {
    let g = log.losses.len();
    if g == 0 {
        return Err(Error::InvalidArgument("convergence log has no steps".into()));
    }
    if log.params.len() != g || log.approx_errors.len() != g || log.grad_norms.len() != g {
        return Err(Error::InvalidArgument(format!(
            "convergence log fields disagree: {} losses, {} params, {} errors, {} gradient norms",
            g,
            log.params.len(),
            log.approx_errors.len(),
            log.grad_norms.len()
        )));
    }
    if let Some(p) = log.params.iter().find(|p| p.len() != optimum.params.len()) {
        return Err(Error::dim("convergence log parameters", optimum.params.len(), p.len()));
    }
    let lhs = log.losses.iter().copied().fold(f64::INFINITY, f64::min);
    let d = log
        .params
        .iter()
        .map(|p| distance(p, &optimum.params))
        .fold(0.0, f64::max);
    let sigma = log.grad_norms.iter().copied().fold(0.0, f64::max);
    let eps_sum: f64 = log.approx_errors.iter().sum();
    let gf = g as f64;
    let noise_term = d * sigma / gf.sqrt();
    let error_term = d / gf * eps_sum;
    let rhs = optimum.loss + noise_term + error_term;
    Ok(ProbeReport::new(
        "convergence_bound",
        format!("steps={g} optimum=best-loss proxy"),
        named(&[
            ("optimum_loss", optimum.loss),
            ("diameter", d),
            ("sigma", sigma),
            ("step_term", noise_term),
            ("error_term", error_term),
            ("error_sum", eps_sum),
        ]),
        lhs,
        Relation::AtMost,
        rhs,
        0.0,
    ))
}

fn all_steps(dataset: &OfflineDataset) -> Vec<(&Transition, f64)> {
    dataset
        .trajectories
        .iter()
        .flat_map(|t| t.transitions().iter().zip(t.returns_to_go().iter().copied()))
        .collect()
}

/// Gradient descent with step `lr` on `Σ w_i L_i(θ)` over trajectories `ids`,
/// recording full-dataset quantities before each of the `steps` updates.
pub fn subset_descent_run(
    dataset: &OfflineDataset,
    ids: &[usize],
    weights: &[f64],
    init: &MlpParams,
    steps: usize,
    lr: f64,
) -> Result<ConvergenceLog> {
    if ids.len() != weights.len() {
        return Err(Error::dim("subset weights", ids.len(), weights.len()));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::InvalidArgument(format!("trajectory id {bad} out of range")));
    }
    let everything = all_steps(dataset);
    let mut critic = init.clone();
    let mut log = ConvergenceLog::default();
    for _ in 0..steps {
        let full = mc_critic_loss_grad(&critic, &everything)?;
        let mut approx = vec![0.0; critic.param_count()];
        for (&id, &w) in ids.iter().zip(weights) {
            axpy(w, &trajectory_gradient(dataset, id, &critic)?, &mut approx);
        }
        let mut gap = approx.clone();
        axpy(-1.0, &full.grad, &mut gap);
        log.losses.push(full.loss);
        log.params.push(critic.flatten());
        log.approx_errors.push(norm2(&gap));
        log.grad_norms.push(norm2(&full.grad));
        axpy(-lr, &approx, critic.as_mut_slice());
    }
    Ok(log)
}

/// Full-data gradient descent; returns the lowest-loss parameters visited.
pub fn optimum_proxy(dataset: &OfflineDataset, init: &MlpParams, steps: usize, lr: f64) -> Result<OptimumProxy> {
    let everything = all_steps(dataset);
    let mut critic = init.clone();
    let mut best = OptimumProxy {
        params: critic.flatten(),
        loss: f64::INFINITY,
    };
    for _ in 0..=steps {
        let full = mc_critic_loss_grad(&critic, &everything)?;
        if full.loss < best.loss {
            best = OptimumProxy {
                params: critic.flatten(),
                loss: full.loss,
            };
        }
        axpy(-lr, &full.grad, critic.as_mut_slice());
    }
    Ok(best)
}

/// Weights `K_i / ΣK` that make the weighted sum of all trajectory gradients
/// equal the full gradient exactly.
pub fn transition_share_weights(dataset: &OfflineDataset) -> Vec<f64> {
    let total = dataset.transition_count() as f64;
    dataset.trajectories.iter().map(|t| t.len() as f64 / total).collect()
}

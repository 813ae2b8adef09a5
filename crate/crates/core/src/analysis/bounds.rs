use serde::{Deserialize, Serialize};

use crate::agent::AgentParams;
use crate::envdata::OfflineDataset;
use crate::error::{Error, Result};
use crate::numcore::norm2;

/// Exact maxima over every transition of a dataset at one checkpoint.
///
/// The regression residual uses Monte-Carlo return-to-go targets, matching
/// the loss whose gradients the selector compares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `max |y − Q(s, a)|`
    pub u_td: f64,
    /// `max ‖∇_θ Q(s, a)‖`
    pub u_grad_q: f64,
    /// `max ‖∇_a Q(s, a)‖`
    pub u_grad_a: f64,
    /// `max ‖a‖` over dataset actions
    pub u_a: f64,
    /// `max ‖π(s)‖`
    pub u_pi: f64,
    /// `max ‖∂π(s)/∂φ‖_F`
    pub u_grad_pi: f64,
    /// Subset cap the bound is evaluated for.
    pub n: usize,
    pub lambda: f64,
}

impl BoundConstants {
    /// Lower bound `λ / (λ + 4N(U_TD·U_∇Q)²)` on the submodularity ratio.
    pub fn submodularity_bound(&self) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let c = self.u_td * self.u_grad_q;
        self.lambda / (self.lambda + 4.0 * self.n as f64 * c * c)
    }
}

pub fn measure_bound_constants(
    dataset: &OfflineDataset,
    params: &AgentParams,
    n: usize,
    lambda: f64,
) -> Result<BoundConstants> {
    params.check_env(&dataset.env)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument("lambda must be >= 0".into()));
    }
    let obs = params.obs_dim();
    let act = params.act_dim();
    let mut c = BoundConstants {
        u_td: 0.0,
        u_grad_q: 0.0,
        u_grad_a: 0.0,
        u_a: 0.0,
        u_pi: 0.0,
        u_grad_pi: 0.0,
        n,
        lambda,
    };
    for traj in &dataset.trajectories {
        for (t, y) in traj.transitions().iter().zip(traj.returns_to_go()) {
            let mut input = t.state.clone();
            input.extend_from_slice(&t.action);
            let q = params.critic.forward(&input)?[0];
            let (gp, gi) = params.critic.backward(&input, &[1.0])?;
            c.u_td = c.u_td.max((y - q).abs());
            c.u_grad_q = c.u_grad_q.max(norm2(&gp));
            c.u_grad_a = c.u_grad_a.max(norm2(&gi[obs..]));
            c.u_a = c.u_a.max(norm2(&t.action));

            let z = params.actor.forward(&t.state)?;
            let a = params.act(&t.state)?;
            c.u_pi = c.u_pi.max(norm2(&a));
            let mut frob = 0.0;
            for d in 0..act {
                let mut unit = vec![0.0; act];
                unit[d] = 1.0;
                let (gz, _) = params.actor.backward(&t.state, &unit)?;
                let half = 0.5 * (params.action_high[d] - params.action_low[d]);
                let scale = half * (1.0 - z[d].tanh().powi(2));
                frob += scale * scale * gz.iter().map(|v| v * v).sum::<f64>();
            }
            c.u_grad_pi = c.u_grad_pi.max(frob.sqrt());
        }
    }
    Ok(c)
}

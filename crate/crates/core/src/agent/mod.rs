//! TD3+BC actor-critic: losses, weighted training, checkpoints and evaluation.

mod checkpoint;
mod eval;
mod losses;
mod params;
mod train;

pub use checkpoint::{
    checkpoint_to_string, read_checkpoint, write_checkpoint, CheckpointStore, CHECKPOINT_FORMAT_VERSION,
};
pub use eval::{evaluate, rollout, EvalStats};
pub use losses::{
    actor_loss_grad, mc_critic_loss_grad, q_regression_loss_grad, sample_target_noise, td_critic_loss_grad, td_targets,
    ActorLossGrad, LossGrad,
};
pub(crate) use params::critic_inputs;
pub use params::{AgentParams, TrainConfig};
pub use train::{checkpoint_steps, train, train_with_hook, Adam, TrainLog, TrainOutcome, TrainingView};

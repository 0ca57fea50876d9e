//! Gaussian marking policy, PPO training and deployment.

mod checkpoint;
mod gaussian;
pub mod mlp;
mod ppo;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gaussian::{
    clamp_log_std, gaussian_log_density, ActionSample, PolicyParameters, INIT_LOG_STD, INIT_MEAN, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use mlp::{swish, swish_derivative, Layer, Mlp};
pub use ppo::{
    clipped_surrogate, compute_advantages, ppo_gradient, ppo_loss, train, Adam, BatchLog, Fragment, Gradient, Losses,
    PpoConfig, Sample, Trainer, Transition,
};

use rand::Rng;

use crate::env::{reset, step, Action, EpisodeConfig, EpisodeState};
use crate::error::{Error, Result};
use crate::real::Real;

/// Runs one episode under the policy, sampling actions or (if
/// `deterministic`) taking the clamped mean.
pub fn deploy<T: Real, R: Rng + ?Sized>(
    params: &PolicyParameters<T>,
    config: &EpisodeConfig<T>,
    deterministic: bool,
    rng: &mut R,
) -> Result<EpisodeState<T>> {
    if params.action_dim != config.mode.action_dim() || params.obs_dim() != 3 {
        return Err(Error::InvalidArgument(format!(
            "policy with action dimension {} cannot drive a {} episode",
            params.action_dim,
            config.mode.name()
        )));
    }
    let mut state = reset(config, rng)?;
    while !state.is_done() {
        let obs = state.observation.to_vec();
        let a = if deterministic { params.mean_action(&obs) } else { params.sample_action(&obs, rng).clamped };
        step(&mut state, Action::from_slice(&a))?;
    }
    Ok(state)
}

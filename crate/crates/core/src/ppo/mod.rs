//! Proximal policy optimization for small discrete-action episodic tasks.

mod adam;
mod checkpoint;
mod gae;
mod loss;
mod mlp;
mod policy;
mod train;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gae::gae;
pub use loss::{clipped_objective, ppo_loss, LossOutput};
pub use mlp::{Activations, Mlp};
pub use policy::{masked_softmax, policy_forward, ActionDist, PolicyParams};
pub use train::{gradient_check, Environment, ExecTraining, Rollout, Trainer, UpdateStats};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub minibatch: usize,
    /// Transitions collected per update (rounded up to whole episodes).
    pub rollout: usize,
    pub hidden: usize,
    /// Global gradient norm limit per network; 0 disables clipping.
    pub max_grad_norm: f64,
    /// Multiplier applied to environment rewards before learning.
    pub reward_scale: f64,
    pub normalize_advantages: bool,
    /// Fraction of execution training episodes started at a random decision
    /// step with random inventory.
    pub exploring_starts: f64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_eps: 0.2,
            gamma: 0.99,
            lambda: 0.95,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs: 4,
            minibatch: 256,
            rollout: 2048,
            hidden: 64,
            max_grad_norm: 0.5,
            reward_scale: 1e4,
            normalize_advantages: true,
            exploring_starts: 0.15,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must be in (0, 1)");
        }
        if !((0.0..=1.0).contains(&self.gamma) && (0.0..=1.0).contains(&self.lambda)) {
            return bad("gamma and lambda must be in [0, 1]");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be > 0");
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 || self.max_grad_norm < 0.0 {
            return bad("coefficients must be >= 0");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.rollout == 0 || self.hidden == 0 {
            return bad("epochs, minibatch, rollout and hidden must be > 0");
        }
        if !(0.0..=1.0).contains(&self.exploring_starts) {
            return bad("exploring_starts must be in [0, 1]");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be > 0");
        }
        Ok(())
    }
}

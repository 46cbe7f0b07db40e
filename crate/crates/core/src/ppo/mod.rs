//! Actor-critic proximal policy optimization written from scratch: small
//! batch-normalized networks, Adam, truncated GAE and the clipped
//! surrogate objective.

mod adam;
mod checkpoint;
mod gae;
pub mod nn;
mod objective;
mod policy;
mod trainer;

use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gae::{discounted_returns, gae, normalize};
pub use nn::{BatchNorm, Linear, Matrix, Mlp, Mode};
pub use objective::{
    clipped_surrogate, entropy, Batch, ObjectiveCoefficients, ObjectiveGrad, ObjectiveTerms,
};
pub use policy::{evaluate, mean_std, Evaluation, GreedyPolicy};
pub use trainer::{
    best_instance, episode_seed, train, train_instance, write_learning_curve, Agent, CurvePoint,
    TrainOutcome,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub hidden: Vec<usize>,
    pub bn_momentum: f64,
    /// Training episodes per instance.
    pub episodes: usize,
    /// Greedy evaluation episodes at every evaluation point.
    pub eval_episodes: usize,
    pub eval_interval: usize,
    pub instances: usize,
    pub seed: u64,
    /// First market seed of the evaluation episodes, shared by all
    /// instances and evaluation points.
    pub eval_seed: u64,
    /// Rewards are multiplied by this before computing advantages and
    /// value targets. Reported returns are never scaled.
    pub reward_scale: f64,
    /// Recompute advantages with the current critic before every epoch.
    pub recompute_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            epochs: 3,
            minibatch_size: 100,
            learning_rate: 0.005,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            hidden: vec![64, 64],
            bn_momentum: 0.1,
            episodes: 1000,
            eval_episodes: 5,
            eval_interval: 50,
            instances: 4,
            seed: 0,
            eval_seed: 1_000_000,
            reward_scale: 0.02,
            recompute_advantages: true,
        }
    }
}

impl PpoConfig {
    pub fn coefficients(&self) -> ObjectiveCoefficients {
        ObjectiveCoefficients {
            clip: self.clip,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
        }
    }

    pub fn eval_seeds(&self) -> Vec<u64> {
        (0..self.eval_episodes as u64).map(|i| self.eval_seed + i).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err("ppo.gamma must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err("ppo.gae_lambda must lie in [0, 1]".into());
        }
        if !(self.clip > 0.0) {
            return Err("ppo.clip must be positive".into());
        }
        if !(1..=3).contains(&self.epochs) {
            return Err("ppo.epochs must be between 1 and 3".into());
        }
        if self.minibatch_size == 0 {
            return Err("ppo.minibatch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err("ppo.learning_rate must be positive".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err("ppo.hidden must list positive layer widths".into());
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) {
            return Err("ppo.bn_momentum must lie in (0, 1]".into());
        }
        if self.episodes == 0 || self.instances == 0 || self.eval_episodes == 0 {
            return Err("ppo.episodes, ppo.instances and ppo.eval_episodes must be positive".into());
        }
        if self.eval_interval == 0 {
            return Err("ppo.eval_interval must be positive".into());
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err("ppo.reward_scale must be positive".into());
        }
        Ok(())
    }
}

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nn::{log_softmax, softmax, Matrix, Mlp, Mode};
use super::{
    clipped_surrogate, discounted_returns, evaluate, gae, normalize, AdamState, Batch, Checkpoint,
    GreedyPolicy, PpoConfig, CHECKPOINT_VERSION,
};
use crate::env::{MarketEnv, MdpObservation, SimConfig};
use crate::error::{Error, Result};

/// One evaluation point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub instance: usize,
    pub eval_mean: f64,
    pub eval_std: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub instance: usize,
    pub checkpoint: Checkpoint,
    pub curve: Vec<CurvePoint>,
}

/// Actor, critic and their optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub adam_actor: AdamState,
    pub adam_critic: AdamState,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(cfg: &PpoConfig, rng: &mut R) -> Self {
        let mut sizes = vec![MdpObservation::DIM];
        sizes.extend(&cfg.hidden);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(2);
        sizes.push(1);
        let actor = Mlp::new(&actor_sizes, 0.01, cfg.bn_momentum, rng);
        let critic = Mlp::new(&sizes, 1.0, cfg.bn_momentum, rng);
        let adam = |n| AdamState::new(n, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        Agent {
            adam_actor: adam(actor.param_count()),
            adam_critic: adam(critic.param_count()),
            actor,
            critic,
        }
    }
}

/// Deterministic market seed of a training episode.
pub fn episode_seed(base: u64, instance: usize, episode: usize) -> u64 {
    let mut z = base
        .wrapping_add((instance as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((episode as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Rollout {
    obs: Vec<[f64; 6]>,
    actions: Vec<u8>,
    log_probs: Vec<f64>,
    rewards: Vec<f64>,
}

fn collect_rollout(
    agent: &Agent,
    env: &mut MarketEnv,
    seed: u64,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Rollout, f64)> {
    let t = env.horizon();
    let mut r = Rollout {
        obs: Vec::with_capacity(t),
        actions: Vec::with_capacity(t),
        log_probs: Vec::with_capacity(t),
        rewards: Vec::with_capacity(t),
    };
    let mut obs = env.reset(seed);
    let mut total = 0.0;
    loop {
        let x = obs.to_array();
        let logits = agent.actor.predict(&x);
        let p = softmax(&logits);
        let a = (rng.gen::<f64>() < p[1]) as u8;
        let step = env.step(a)?;
        r.obs.push(x);
        r.actions.push(a);
        r.log_probs.push(log_softmax(&logits)[a as usize]);
        r.rewards.push(step.reward * scale);
        total += step.reward;
        obs = step.observation;
        if step.done {
            break;
        }
    }
    Ok((r, total))
}

fn diverged(instance: usize, episode: usize, reason: impl Into<String>) -> Error {
    Error::Divergence {
        instance,
        episode,
        reason: reason.into(),
    }
}

/// Train one instance. Each episode collects a full rollout with the
/// stochastic policy, then runs up to three epochs of shuffled minibatch
/// Adam updates. Batch-norm layers run on their running statistics
/// throughout, so the behavior policy and the policy being optimized
/// normalize identically; the statistics are refreshed from each rollout
/// after its updates.
pub fn train_instance(sim: &SimConfig, cfg: &PpoConfig, instance: usize) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(16 + instance as u64);
    let mut agent = Agent::new(cfg, &mut rng);
    let mut env = MarketEnv::new(sim.clone());
    let coef = cfg.coefficients();
    let eval_seeds = cfg.eval_seeds();
    let mut curve = Vec::new();

    for episode in 1..=cfg.episodes {
        let seed = episode_seed(cfg.seed, instance, episode);
        let (ro, _) = collect_rollout(&agent, &mut env, seed, cfg.reward_scale, &mut rng)?;
        let n = ro.obs.len();
        let obs = Matrix::from_rows(&ro.obs);
        let returns = discounted_returns(&ro.rewards, cfg.gamma);
        let mut adv = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();

        for epoch in 0..cfg.epochs {
            if epoch == 0 || cfg.recompute_advantages {
                let mut values = agent.critic.forward(&obs, Mode::Eval).output.data;
                values.push(0.0);
                adv = gae(&ro.rewards, &values, cfg.gamma, cfg.gae_lambda);
                normalize(&mut adv);
            }
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.minibatch_size) {
                let mb_obs = Matrix::from_rows(&chunk.iter().map(|&i| ro.obs[i]).collect::<Vec<_>>());
                let pick = |v: &[f64]| chunk.iter().map(|&i| v[i]).collect::<Vec<f64>>();
                let actions: Vec<u8> = chunk.iter().map(|&i| ro.actions[i]).collect();
                let (old, a, r) = (pick(&ro.log_probs), pick(&adv), pick(&returns));
                let batch = Batch {
                    obs: &mb_obs,
                    actions: &actions,
                    old_log_probs: &old,
                    advantages: &a,
                    returns: &r,
                };
                let g = clipped_surrogate(&agent.actor, &agent.critic, batch, coef, Mode::Eval);
                if !g.terms.objective.is_finite() {
                    return Err(diverged(instance, episode, "non-finite objective"));
                }
                let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
                let mut p = agent.actor.params();
                agent.adam_actor.step(&mut p, &neg(g.actor));
                agent.actor.set_params(&p);
                let mut p = agent.critic.params();
                agent.adam_critic.step(&mut p, &neg(g.critic));
                agent.critic.set_params(&p);
            }
        }
        agent.actor.norm.update_running(&obs);
        agent.critic.norm.update_running(&obs);
        if !agent.actor.is_finite() || !agent.critic.is_finite() {
            return Err(diverged(instance, episode, "non-finite parameters"));
        }

        if episode % cfg.eval_interval == 0 || episode == cfg.episodes {
            let actor = agent.actor.clone();
            let ev = evaluate(|| GreedyPolicy::new(actor.clone()), sim, &eval_seeds)?;
            curve.push(CurvePoint {
                episode,
                instance,
                eval_mean: ev.mean,
                eval_std: ev.std,
            });
        }
    }

    let final_eval_mean = curve.last().map_or(f64::NAN, |c| c.eval_mean);
    Ok(TrainOutcome {
        instance,
        checkpoint: Checkpoint {
            version: CHECKPOINT_VERSION,
            instance,
            episodes: cfg.episodes,
            actor: agent.actor,
            critic: agent.critic,
            adam_actor: agent.adam_actor,
            adam_critic: agent.adam_critic,
            rng,
            ppo: cfg.clone(),
            sim: sim.clone(),
            final_eval_mean,
        },
        curve,
    })
}

/// Train `cfg.instances` independent instances in parallel. Results come
/// back in instance order; a diverged instance does not stop the others.
pub fn train(sim: &SimConfig, cfg: &PpoConfig) -> Vec<Result<TrainOutcome>> {
    (0..cfg.instances)
        .into_par_iter()
        .map(|i| train_instance(sim, cfg, i))
        .collect()
}

/// Index of the instance with the highest final evaluation mean, lowest
/// index on ties.
pub fn best_instance(outcomes: &[Result<TrainOutcome>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(o) = o {
            let m = o.checkpoint.final_eval_mean;
            if best.map_or(true, |(_, b)| m > b) {
                best = Some((i, m));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// `episode,instance,eval_mean,eval_std`, one row per evaluation point.
pub fn write_learning_curve(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut out = String::from("episode,instance,eval_mean,eval_std\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.episode, p.instance, p.eval_mean, p.eval_std));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

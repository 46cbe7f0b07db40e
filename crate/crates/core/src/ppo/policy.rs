use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nn::{softmax, Mlp};
use crate::env::{run_episode, EpisodeTrace, MarketEnv, MdpObservation, Policy, SimConfig};
use crate::error::Result;

/// Picks the most probable action of a frozen actor, `η = 0` on ties.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    pub actor: Mlp,
}

impl GreedyPolicy {
    pub fn new(actor: Mlp) -> Self {
        GreedyPolicy { actor }
    }

    pub fn probabilities(&self, obs: &MdpObservation) -> Vec<f64> {
        softmax(&self.actor.predict(&obs.to_array()))
    }
}

impl Policy for GreedyPolicy {
    fn act(&mut self, obs: &MdpObservation) -> u8 {
        let p = self.probabilities(obs);
        (p[1] > p[0]) as u8
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; zero for a
/// single value).
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Cumulative fitness of every episode, in seed order.
    pub returns: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// How often each `η` was chosen, over all episodes.
    pub eta_counts: [usize; 2],
    pub traces: Vec<EpisodeTrace>,
}

impl Evaluation {
    pub fn eta_frequencies(&self) -> [f64; 2] {
        let n = (self.eta_counts[0] + self.eta_counts[1]).max(1) as f64;
        [self.eta_counts[0] as f64 / n, self.eta_counts[1] as f64 / n]
    }
}

/// Run one episode per seed with a fresh policy from `make`, in parallel,
/// collecting results in seed order.
pub fn evaluate<P, F>(make: F, sim: &SimConfig, seeds: &[u64]) -> Result<Evaluation>
where
    P: Policy,
    F: Fn() -> P + Sync,
{
    let traces = seeds
        .par_iter()
        .map(|&seed| {
            let mut env = MarketEnv::new(sim.clone());
            let mut policy = make();
            run_episode(&mut env, &mut policy, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let returns: Vec<f64> = traces.iter().map(EpisodeTrace::cumulative_reward).collect();
    let (mean, std) = mean_std(&returns);
    let mut eta_counts = [0, 0];
    for t in &traces {
        for e in t.etas() {
            eta_counts[e as usize] += 1;
        }
    }
    Ok(Evaluation {
        returns,
        mean,
        std,
        eta_counts,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BernoulliPolicy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_actor_ties_to_zero() {
        let actor = Mlp::new(&[6, 8, 2], 0.0, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
        let mut p = GreedyPolicy::new(actor);
        assert_eq!(p.act(&MdpObservation::default()), 0);
    }

    #[test]
    fn bernoulli_through_evaluation() {
        let mut sim = SimConfig::default();
        sim.env.horizon = 200;
        let e = evaluate(|| BernoulliPolicy::new(0.5), &sim, &[1, 2, 3]).unwrap();
        let n = 600.0;
        let f = e.eta_frequencies();
        assert!((f[1] - 0.5).abs() < 3.0 * (0.25f64 / n).sqrt());
        for r in &e.returns {
            assert!(*r >= 0.0 && *r <= 50.0 * 200.0);
        }
    }

    #[test]
    fn sample_statistics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}

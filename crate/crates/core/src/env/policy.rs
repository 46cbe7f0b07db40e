use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MdpObservation;

/// Chooses the recommendation `η` from the current observation.
pub trait Policy {
    fn act(&mut self, obs: &MdpObservation) -> u8;

    /// Called at the start of every episode with its seed.
    fn reset(&mut self, _seed: u64) {}
}

/// Always recommends the same `η`.
#[derive(Debug, Clone, Copy)]
pub struct FixedPolicy(pub u8);

impl Policy for FixedPolicy {
    fn act(&mut self, _obs: &MdpObservation) -> u8 {
        self.0
    }
}

/// `η = 1` with probability `p`, independently every step. The draw
/// sequence is reseeded from the episode seed so that baselines are
/// reproducible and paired with the market's own shocks.
#[derive(Debug, Clone)]
pub struct BernoulliPolicy {
    p: f64,
    rng: ChaCha8Rng,
}

impl BernoulliPolicy {
    const STREAM: u64 = 4;

    pub fn new(p: f64) -> Self {
        let mut b = BernoulliPolicy {
            p,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        b.reset(0);
        b
    }
}

impl Policy for BernoulliPolicy {
    fn act(&mut self, _obs: &MdpObservation) -> u8 {
        (self.rng.gen::<f64>() < self.p) as u8
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.rng.set_stream(Self::STREAM);
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn act(&mut self, obs: &MdpObservation) -> u8 {
        (**self).act(obs)
    }

    fn reset(&mut self, seed: u64) {
        (**self).reset(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_frequency() {
        let mut p = BernoulliPolicy::new(0.5);
        p.reset(8);
        let n = 10_000;
        let ones: usize = (0..n).map(|_| p.act(&MdpObservation::default()) as usize).sum();
        let sd = (0.25f64 / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn bernoulli_reseeds() {
        let mut p = BernoulliPolicy::new(0.5);
        let o = MdpObservation::default();
        p.reset(3);
        let a: Vec<u8> = (0..50).map(|_| p.act(&o)).collect();
        p.reset(3);
        let b: Vec<u8> = (0..50).map(|_| p.act(&o)).collect();
        assert_eq!(a, b);
    }
}

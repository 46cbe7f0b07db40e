/// Truncated generalized advantage estimates.
///
/// `values` has one entry more than `rewards`: the last one bootstraps the
/// state after the final step, zero at a terminal state.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, tau: f64) -> Vec<f64> {
    assert_eq!(values.len(), rewards.len() + 1, "values need a bootstrap entry");
    let mut adv = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * tau * acc;
        adv[t] = acc;
    }
    adv
}

/// Discounted reward-to-go `Σ_k γ^k r_{t+k}`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Shift to zero mean and scale to unit standard deviation. A constant
/// input is only centered.
pub fn normalize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let scale = if sd > 1e-12 { 1.0 / sd } else { 1.0 };
    x.iter_mut().for_each(|v| *v = (*v - mean) * scale);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(r: &[f64], v: &[f64], gamma: f64, tau: f64) -> Vec<f64> {
        let n = r.len();
        let delta: Vec<f64> = (0..n).map(|t| r[t] + gamma * v[t + 1] - v[t]).collect();
        (0..n)
            .map(|t| (t..n).map(|k| (gamma * tau).powi((k - t) as i32) * delta[k]).sum())
            .collect()
    }

    #[test]
    fn one_step_residual_when_tau_is_zero() {
        let r = [1.0, -0.5, 2.0];
        let v = [0.3, 0.1, -0.2, 0.0];
        let a = gae(&r, &v, 0.9, 0.0);
        for t in 0..3 {
            assert_eq!(a[t], r[t] + 0.9 * v[t + 1] - v[t]);
        }
    }

    #[test]
    fn reward_to_go_without_discount_or_values() {
        let r = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(gae(&r, &[0.0; 5], 1.0, 1.0), vec![10.0, 9.0, 7.0, 4.0]);
        assert_eq!(discounted_returns(&r, 1.0), vec![10.0, 9.0, 7.0, 4.0]);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let r: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut v: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            v[5] = 0.0;
            let (g, l) = (rng.gen_range(0.5..1.0), rng.gen_range(0.0..1.0));
            for (a, b) in gae(&r, &v, g, l).iter().zip(brute_force(&r, &v, g, l)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn normalization() {
        let mut x = vec![1.0, 2.0, 3.0, 4.0];
        normalize(&mut x);
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        assert!((x.iter().map(|v| v * v).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
        let mut c = vec![2.0; 3];
        normalize(&mut c);
        assert_eq!(c, vec![0.0; 3]);
    }
}

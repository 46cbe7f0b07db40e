use super::nn::{log_softmax, softmax, Matrix, Mlp, Mode};

/// A minibatch of rollout samples.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub obs: &'a Matrix,
    pub actions: &'a [u8],
    /// Log-probability of each action under the behavior policy.
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
    /// Value targets.
    pub returns: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ObjectiveTerms {
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// `surrogate - c₁·value_loss + c₂·entropy`, to be maximized.
    pub objective: f64,
    pub clip_fraction: f64,
}

/// Objective terms and the gradient of the objective with respect to the
/// actor and critic parameters.
#[derive(Debug, Clone)]
pub struct ObjectiveGrad {
    pub terms: ObjectiveTerms,
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveCoefficients {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Clipped surrogate with value loss and entropy bonus, averaged over the
/// batch, and its exact gradient.
pub fn clipped_surrogate(
    actor: &Mlp,
    critic: &Mlp,
    batch: Batch<'_>,
    coef: ObjectiveCoefficients,
    mode: Mode,
) -> ObjectiveGrad {
    let n = batch.obs.rows;
    let nf = n as f64;
    let a_cache = actor.forward(batch.obs, mode);
    let c_cache = critic.forward(batch.obs, mode);
    let k = actor.output_dim();

    let mut d_logits = Matrix::zeros(n, k);
    let mut terms = ObjectiveTerms::default();
    for i in 0..n {
        let z = a_cache.output.row(i);
        let logp = log_softmax(z);
        let p = softmax(z);
        let a = batch.actions[i] as usize;
        let adv = batch.advantages[i];
        let ratio = (logp[a] - batch.old_log_probs[i]).exp();
        let clipped = ratio.clamp(1.0 - coef.clip, 1.0 + coef.clip);
        let unclipped_term = ratio * adv;
        let clipped_term = clipped * adv;
        // The gradient flows through the ratio only when the unclipped term
        // is the minimum.
        let (surr, d_logp) = if unclipped_term <= clipped_term {
            (unclipped_term, ratio * adv)
        } else {
            (clipped_term, 0.0)
        };
        if clipped != ratio {
            terms.clip_fraction += 1.0;
        }
        let h: f64 = -p.iter().zip(&logp).map(|(pi, li)| pi * li).sum::<f64>();
        terms.surrogate += surr;
        terms.entropy += h;

        let row = d_logits.row_mut(i);
        for j in 0..k {
            let onehot = if j == a { 1.0 } else { 0.0 };
            let d_surr = d_logp * (onehot - p[j]);
            let d_ent = -p[j] * (logp[j] + h);
            row[j] = (d_surr + coef.entropy_coef * d_ent) / nf;
        }
    }

    let mut d_values = Matrix::zeros(n, 1);
    for i in 0..n {
        let v = c_cache.output.row(i)[0];
        let err = v - batch.returns[i];
        terms.value_loss += err * err;
        d_values.row_mut(i)[0] = -coef.value_coef * 2.0 * err / nf;
    }

    terms.surrogate /= nf;
    terms.entropy /= nf;
    terms.value_loss /= nf;
    terms.clip_fraction /= nf;
    terms.objective =
        terms.surrogate - coef.value_coef * terms.value_loss + coef.entropy_coef * terms.entropy;

    ObjectiveGrad {
        terms,
        actor: actor.backward(&a_cache, &d_logits),
        critic: critic.backward(&c_cache, &d_values),
    }
}

/// Entropy of a discrete distribution in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        actor: Mlp,
        critic: Mlp,
        obs: Matrix,
        actions: Vec<u8>,
        old: Vec<f64>,
        adv: Vec<f64>,
        ret: Vec<f64>,
    }

    fn fixture(seed: u64, behaviour_is_current: bool) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut actor = Mlp::new(&[6, 4, 2], 1.0, 0.1, &mut rng);
        let mut critic = Mlp::new(&[6, 4, 1], 1.0, 0.1, &mut rng);
        let n = 12;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let obs = Matrix::from_rows(&rows);
        actor.norm.update_running(&obs);
        critic.norm.update_running(&obs);
        let actions: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let out = actor.forward(&obs, Mode::Eval).output;
        let old = (0..n)
            .map(|i| {
                let lp = log_softmax(out.row(i))[actions[i] as usize];
                if behaviour_is_current {
                    lp
                } else {
                    lp + rng.gen_range(-0.5..0.5)
                }
            })
            .collect();
        Fixture {
            actor,
            critic,
            obs,
            actions,
            old,
            adv: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
            ret: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        }
    }

    const COEF: ObjectiveCoefficients = ObjectiveCoefficients {
        clip: 0.2,
        value_coef: 0.5,
        entropy_coef: 0.01,
    };

    fn eval(f: &Fixture, actor: &Mlp, critic: &Mlp) -> ObjectiveGrad {
        let batch = Batch {
            obs: &f.obs,
            actions: &f.actions,
            old_log_probs: &f.old,
            advantages: &f.adv,
            returns: &f.ret,
        };
        clipped_surrogate(actor, critic, batch, COEF, Mode::Eval)
    }

    #[test]
    fn ratio_one_gives_mean_advantage() {
        let f = fixture(3, true);
        let g = eval(&f, &f.actor, &f.critic);
        let mean = f.adv.iter().sum::<f64>() / f.adv.len() as f64;
        assert!((g.terms.surrogate - mean).abs() < 1e-12);
        assert_eq!(g.terms.clip_fraction, 0.0);
    }

    #[test]
    fn clipped_sample_has_no_ratio_gradient() {
        let mut f = fixture(5, true);
        f.actions.truncate(1);
        f.obs = Matrix::from_rows(&[f.obs.row(0).to_vec()]);
        f.adv = vec![1.0];
        f.ret = vec![0.0];
        // Behavior log-probability chosen so that the ratio is 1 + 2ε.
        let lp = log_softmax(f.actor.forward(&f.obs, Mode::Eval).output.row(0))[f.actions[0] as usize];
        f.old = vec![lp - (1.4f64).ln()];
        let no_entropy = ObjectiveCoefficients {
            entropy_coef: 0.0,
            ..COEF
        };
        let batch = Batch {
            obs: &f.obs,
            actions: &f.actions,
            old_log_probs: &f.old,
            advantages: &f.adv,
            returns: &f.ret,
        };
        let g = clipped_surrogate(&f.actor, &f.critic, batch, no_entropy, Mode::Eval);
        assert!((g.terms.surrogate - 1.2).abs() < 1e-12);
        assert!(g.actor.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..5 {
            let f = fixture(seed, false);
            let g = eval(&f, &f.actor, &f.critic);
            let h = 1e-5;
            let check = |analytic: &[f64], objective: &dyn Fn(&[f64]) -> f64, p0: &[f64]| {
                for k in 0..p0.len() {
                    let mut p = p0.to_vec();
                    p[k] += h;
                    let up = objective(&p);
                    p[k] -= 2.0 * h;
                    let down = objective(&p);
                    let fd = (up - down) / (2.0 * h);
                    let scale = fd.abs().max(analytic[k].abs());
                    assert!(
                        (fd - analytic[k]).abs() <= 1e-4 * scale + 1e-10,
                        "seed {seed} param {k}: fd {fd} analytic {}",
                        analytic[k]
                    );
                }
            };
            let actor_obj = |p: &[f64]| {
                let mut a = f.actor.clone();
                a.set_params(p);
                eval(&f, &a, &f.critic).terms.objective
            };
            check(&g.actor, &actor_obj, &f.actor.params());
            let critic_obj = |p: &[f64]| {
                let mut c = f.critic.clone();
                c.set_params(p);
                eval(&f, &f.actor, &c).terms.objective
            };
            check(&g.critic, &critic_obj, &f.critic.params());
        }
    }

    #[test]
    fn entropy_is_maximal_at_uniform() {
        assert!((entropy(&[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-15);
        for k in 1..100 {
            let p = k as f64 / 100.0;
            assert!(entropy(&[p, 1.0 - p]) <= std::f64::consts::LN_2 + 1e-15);
        }
    }
}

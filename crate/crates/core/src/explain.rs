//! Exact Shapley attribution of the actor's class probabilities to its six
//! inputs.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::MdpObservation;
use crate::error::{Error, Result};
use crate::ppo::nn::{softmax, Mlp};

/// Attribution of one model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shapley {
    pub phi: Vec<f64>,
    /// Output with every feature at the reference.
    pub base_value: f64,
    /// Output at the explained point.
    pub value: f64,
}

/// Shapley values of `f` at `x` by enumerating all `2^K` coalitions.
/// Features outside a coalition take their `reference` value.
pub fn shapley_exact<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], reference: &[f64]) -> Shapley {
    let k = x.len();
    assert_eq!(reference.len(), k);
    assert!(k < 24, "exact enumeration over {k} features is too large");
    let coalitions = 1usize << k;
    let mut input = vec![0.0; k];
    let values: Vec<f64> = (0..coalitions)
        .map(|mask| {
            for i in 0..k {
                input[i] = if mask >> i & 1 == 1 { x[i] } else { reference[i] };
            }
            f(&input)
        })
        .collect();

    // |S|! (K - |S| - 1)! / K!
    let fact: Vec<f64> = (0..=k).scan(1.0, |acc, n| {
        if n > 0 {
            *acc *= n as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight: Vec<f64> = (0..k).map(|s| fact[s] * fact[k - s - 1] / fact[k]).collect();

    let mut phi = vec![0.0; k];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1 << i;
        for mask in (0..coalitions).filter(|m| m & bit == 0) {
            let s = mask.count_ones() as usize;
            *p += weight[s] * (values[mask | bit] - values[mask]);
        }
    }
    Shapley {
        phi,
        base_value: values[0],
        value: values[coalitions - 1],
    }
}

/// Feature-wise mean of a set of observations.
pub fn background_mean(background: &[MdpObservation]) -> Result<[f64; 6]> {
    if background.is_empty() {
        return Err(Error::InvalidInput("empty background set".into()));
    }
    let mut m = [0.0; 6];
    for o in background {
        for (a, v) in m.iter_mut().zip(o.to_array()) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= background.len() as f64);
    Ok(m)
}

/// Attribution of one sample and one action class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSample {
    pub sample: usize,
    pub class: u8,
    pub features: [f64; 6],
    pub shapley: Shapley,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapResult {
    pub reference: [f64; 6],
    pub samples: Vec<ShapSample>,
}

/// Explain both class probabilities of `actor` at every sample, against
/// the mean of `background`.
pub fn explain_actor(
    actor: &Mlp,
    samples: &[MdpObservation],
    background: &[MdpObservation],
) -> Result<ShapResult> {
    let reference = background_mean(background)?;
    let rows: Vec<ShapSample> = samples
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, o)| {
            let x = o.to_array();
            (0..2u8).map(move |class| ShapSample {
                sample: i,
                class,
                features: x,
                shapley: shapley_exact(
                    |v| softmax(&actor.predict(v))[class as usize],
                    &x,
                    &reference,
                ),
            })
        })
        .collect();
    Ok(ShapResult {
        reference,
        samples: rows,
    })
}

/// One row of the importance ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub class: u8,
    pub rank: usize,
    pub feature: String,
    pub mean_abs_phi: f64,
}

/// Features ranked by mean `|φ|` within each class, ties kept in input
/// order.
pub fn shap_summary(result: &ShapResult, names: &[&str]) -> Vec<FeatureImportance> {
    let mut classes: Vec<u8> = result.samples.iter().map(|s| s.class).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut out = Vec::new();
    for class in classes {
        let rows: Vec<&ShapSample> = result.samples.iter().filter(|s| s.class == class).collect();
        let mut score: Vec<(usize, f64)> = (0..names.len())
            .map(|k| {
                let total: f64 = rows.iter().map(|s| s.shapley.phi[k].abs()).sum();
                (k, total / rows.len() as f64)
            })
            .collect();
        score.sort_by(|a, b| b.1.total_cmp(&a.1));
        out.extend(score.into_iter().enumerate().map(|(rank, (k, m))| FeatureImportance {
            class,
            rank: rank + 1,
            feature: names[k].to_string(),
            mean_abs_phi: m,
        }));
    }
    out
}

/// `feature,sample,phi,feature_value,class`.
pub fn write_shap_csv(path: &Path, result: &ShapResult) -> Result<()> {
    let mut s = String::from("feature,sample,phi,feature_value,class\n");
    for row in &result.samples {
        for (k, name) in MdpObservation::NAMES.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                name, row.sample, row.shapley.phi[k], row.features[k], row.class
            ));
        }
    }
    write(path, &s)
}

/// `class,rank,feature,mean_abs_phi`.
pub fn write_ranking_csv(path: &Path, ranking: &[FeatureImportance]) -> Result<()> {
    let mut s = String::from("class,rank,feature,mean_abs_phi\n");
    for r in ranking {
        s.push_str(&format!("{},{},{},{}\n", r.class, r.rank, r.feature, r.mean_abs_phi));
    }
    write(path, &s)
}

fn write(path: &Path, s: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Coalition values enumerated by permutations instead of subsets.
    fn by_permutations<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], r: &[f64]) -> Vec<f64> {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let k = x.len();
        let all = perms(k);
        let mut phi = vec![0.0; k];
        for order in &all {
            let mut v = r.to_vec();
            let mut prev = f(&v);
            for &i in order {
                v[i] = x[i];
                let now = f(&v);
                phi[i] += now - prev;
                prev = now;
            }
        }
        phi.iter().map(|p| p / all.len() as f64).collect()
    }

    #[test]
    fn linear_model_recovers_coefficients() {
        let s = shapley_exact(|v| v[0] + 2.0 * v[1], &[1.0, 1.0], &[0.0, 0.0]);
        assert!((s.phi[0] - 1.0).abs() < 1e-15);
        assert!((s.phi[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_deviation_no_attribution() {
        let x = [1.0, -2.0, 0.5, 3.0, 0.0, 7.0];
        let s = shapley_exact(|v| v.iter().product::<f64>().sin() + v[0] * v[5], &x, &x);
        assert!(s.phi.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn efficiency_on_a_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let actor = Mlp::new(&[6, 16, 16, 2], 1.0, 0.1, &mut rng);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let r: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for class in 0..2 {
                let f = |v: &[f64]| softmax(&actor.predict(v))[class];
                let s = shapley_exact(f, &x, &r);
                let total: f64 = s.phi.iter().sum();
                assert!((total - (s.value - s.base_value)).abs() < 1e-6);
                assert!((s.value - f(&x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matches_permutation_definition() {
        let f = |v: &[f64]| (v[0] * v[1]).tanh() + v[2] * v[2] - v[3] * v[0];
        let x = [0.3, -1.2, 0.8, 2.0];
        let r = [0.1, 0.4, -0.5, 0.0];
        let s = shapley_exact(f, &x, &r);
        for (a, b) in s.phi.iter().zip(by_permutations(f, &x, &r)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_features_share_equally() {
        let f = |v: &[f64]| (v[0] + v[1]).powi(2) + v[2];
        let s = shapley_exact(f, &[1.0, 1.0, 3.0], &[0.0, 0.0, 0.0]);
        assert!((s.phi[0] - s.phi[1]).abs() < 1e-12);
    }

    #[test]
    fn ignored_feature_gets_nothing() {
        let f = |v: &[f64]| v[0].exp() * v[2] + v[3];
        let s = shapley_exact(f, &[1.0, 5.0, 2.0, -1.0], &[0.0, 0.0, 0.0, 0.0]);
        assert!(s.phi[1].abs() < 1e-10);
    }

    fn result_from(phis: &[[f64; 6]]) -> ShapResult {
        ShapResult {
            reference: [0.0; 6],
            samples: phis
                .iter()
                .enumerate()
                .map(|(i, p)| ShapSample {
                    sample: i,
                    class: 0,
                    features: [0.0; 6],
                    shapley: Shapley {
                        phi: p.to_vec(),
                        base_value: 0.0,
                        value: p.iter().sum(),
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn ranking_rules() {
        let names = MdpObservation::NAMES;
        let r = shap_summary(&result_from(&[[0.0, 0.0, 0.0, 0.4, 0.0, 0.0]]), &names);
        assert_eq!(r[0].feature, "c_avg");
        let zero = shap_summary(&result_from(&[[0.0; 6]]), &names);
        let order: Vec<&str> = zero.iter().map(|f| f.feature.as_str()).collect();
        assert_eq!(order, names.to_vec());
        let a = [[0.1, -0.5, 0.2, 0.0, 0.3, 0.0], [0.4, 0.1, -0.1, 0.2, 0.0, 0.05]];
        let b = [a[1], a[0]];
        let ra: Vec<String> = shap_summary(&result_from(&a), &names).into_iter().map(|f| f.feature).collect();
        let rb: Vec<String> = shap_summary(&result_from(&b), &names).into_iter().map(|f| f.feature).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn actor_explanation_and_export() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actor = Mlp::new(&[6, 8, 2], 1.0, 0.1, &mut rng);
        let obs: Vec<MdpObservation> = (0..5)
            .map(|_| MdpObservation::from_slice(&(0..6).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let res = explain_actor(&actor, &obs[..3], &obs).unwrap();
        assert_eq!(res.samples.len(), 6);
        for s in &res.samples {
            let total: f64 = s.shapley.phi.iter().sum();
            assert!((total - (s.shapley.value - s.shapley.base_value)).abs() < 1e-6);
        }
        let ranking = shap_summary(&res, &MdpObservation::NAMES);
        assert_eq!(ranking.iter().filter(|r| r.class == 1).count(), 6);
        let dir = tempfile::tempdir().unwrap();
        write_shap_csv(&dir.path().join("shap.csv"), &res).unwrap();
        let text = std::fs::read_to_string(dir.path().join("shap.csv")).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 * 6);
        assert!(explain_actor(&actor, &obs, &[]).is_err());
    }
}

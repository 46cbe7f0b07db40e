use rand::Rng;

use super::graph::{sample_excluding, CreditGraph};

/// Logistic switching probability `1 / (1 + exp(-β(μ_k - μ_i)))`.
pub fn switch_probability(beta: f64, candidate_fitness: f64, current_fitness: f64) -> f64 {
    1.0 / (1.0 + (-beta * (candidate_fitness - current_fitness)).exp())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RewireStats {
    /// Existing links moved to a new lender.
    pub switches: usize,
    /// Empty slots filled by a previously isolated borrower.
    pub adoptions: usize,
}

/// One rewiring round in ascending borrower order.
///
/// Each link `j → i` is compared with a uniformly drawn candidate `k ∉ {j,
/// lenders of j}` and moved with the logistic probability. An empty slot
/// compares the candidate against a phantom lender of average fitness.
pub fn rewire<R: Rng + ?Sized>(
    graph: &mut CreditGraph,
    fitness: &[f64],
    alive: &[bool],
    beta: f64,
    rng: &mut R,
) -> RewireStats {
    let (sum, n) = alive
        .iter()
        .zip(fitness)
        .filter(|(&a, _)| a)
        .fold((0.0, 0usize), |(s, n), (_, &f)| (s + f, n + 1));
    let phantom = if n > 0 { sum / n as f64 } else { 0.0 };

    let mut stats = RewireStats::default();
    for j in 0..graph.node_count() {
        if !alive[j] {
            continue;
        }
        for slot in 0..graph.max_out_degree() {
            let mut excluded = graph.lenders_of(j).to_vec();
            excluded.push(j);
            let Some(k) = sample_excluding(alive, &excluded, rng) else {
                break;
            };
            let u: f64 = rng.gen();
            match graph.lenders_of(j).get(slot).copied() {
                Some(i) => {
                    if u < switch_probability(beta, fitness[k], fitness[i]) {
                        graph.replace_edge(j, slot, k);
                        stats.switches += 1;
                    }
                }
                None => {
                    if u < switch_probability(beta, fitness[k], phantom) {
                        graph.add_edge(j, k);
                        stats.adoptions += 1;
                    }
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logistic_cases() {
        assert_eq!(switch_probability(5.0, 0.4, 0.4), 0.5);
        let p = switch_probability(5.0, 0.7, 0.5);
        assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        assert!((p - 0.731_058_578_6).abs() < 1e-9);
        assert_eq!(switch_probability(0.0, 1.0, 0.0), 0.5);
    }

    proptest! {
        #[test]
        fn logistic_symmetry_and_monotonicity(beta in 0.0f64..40.0, d in -1.0f64..1.0, e in 0.0f64..0.5) {
            let p = switch_probability(beta, d, 0.0);
            let q = switch_probability(beta, -d, 0.0);
            prop_assert!((p + q - 1.0).abs() < 1e-12);
            prop_assert!(switch_probability(beta, d + e, 0.0) >= p);
        }

        #[test]
        fn rewire_keeps_graph_well_formed(seed in any::<u64>(), beta in 0.0f64..40.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 30;
            let mut g = CreditGraph::random(n, 1, 0.25, &mut rng);
            let mut alive = vec![true; n];
            alive[3] = false;
            alive[17] = false;
            g.detach(3);
            g.detach(17);
            let fit: Vec<f64> = (0..n).map(|_| rand::Rng::gen(&mut rng)).collect();
            for _ in 0..10 {
                rewire(&mut g, &fit, &alive, beta, &mut rng);
            }
            for (j, i) in g.edges() {
                prop_assert_ne!(j, i);
                prop_assert!(alive[i] && alive[j]);
            }
            for j in 0..n {
                prop_assert!(g.lenders_of(j).len() <= 1);
            }
        }
    }

    #[test]
    fn strong_preference_concentrates_links() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 50;
        let mut g = CreditGraph::random(n, 1, 0.25, &mut rng);
        let mut fit = vec![0.0; n];
        fit[7] = 1.0;
        let alive = vec![true; n];
        for _ in 0..200 {
            rewire(&mut g, &fit, &alive, 40.0, &mut rng);
        }
        // Almost every bank other than the hub itself ends up pointing at it.
        assert!(g.in_degrees()[7] >= 45);
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Directed credit graph. An edge `j → i` means borrower `j` holds a credit
/// line with lender `i`; every node has at most `max_out_degree` lenders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreditGraph {
    out: Vec<Vec<usize>>,
    max_out_degree: usize,
}

impl CreditGraph {
    pub fn new(n: usize, max_out_degree: usize) -> Self {
        CreditGraph {
            out: vec![Vec::with_capacity(max_out_degree); n],
            max_out_degree,
        }
    }

    /// Every node draws its initial lenders, staying isolated with
    /// probability `isolation_prob`.
    pub fn random<R: Rng + ?Sized>(
        n: usize,
        max_out_degree: usize,
        isolation_prob: f64,
        rng: &mut R,
    ) -> Self {
        let mut g = CreditGraph::new(n, max_out_degree);
        let alive = vec![true; n];
        for j in 0..n {
            g.draw_links(j, &alive, isolation_prob, rng);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn max_out_degree(&self) -> usize {
        self.max_out_degree
    }

    pub fn lenders_of(&self, borrower: usize) -> &[usize] {
        &self.out[borrower]
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// `(borrower, lender)` pairs in ascending borrower order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(j, ls)| ls.iter().map(move |&i| (j, i)))
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.out.len()];
        for (_, i) in self.edges() {
            deg[i] += 1;
        }
        deg
    }

    pub fn add_edge(&mut self, borrower: usize, lender: usize) {
        assert_ne!(borrower, lender, "self-loop");
        assert!(self.out[borrower].len() < self.max_out_degree, "out-degree cap");
        assert!(!self.out[borrower].contains(&lender), "duplicate edge");
        self.out[borrower].push(lender);
    }

    pub(crate) fn replace_edge(&mut self, borrower: usize, slot: usize, lender: usize) {
        debug_assert_ne!(borrower, lender);
        self.out[borrower][slot] = lender;
    }

    /// Drop every edge touching `node`.
    pub fn detach(&mut self, node: usize) {
        self.out[node].clear();
        for ls in &mut self.out {
            ls.retain(|&i| i != node);
        }
    }

    /// Give `node` fresh lenders among alive banks: isolated with
    /// probability `isolation_prob`, otherwise `max_out_degree` distinct
    /// uniformly drawn lenders (fewer if not enough candidates exist).
    pub fn draw_links<R: Rng + ?Sized>(
        &mut self,
        node: usize,
        alive: &[bool],
        isolation_prob: f64,
        rng: &mut R,
    ) {
        self.out[node].clear();
        if rng.gen::<f64>() < isolation_prob {
            return;
        }
        for _ in 0..self.max_out_degree {
            let mut excluded = self.out[node].clone();
            excluded.push(node);
            match sample_excluding(alive, &excluded, rng) {
                Some(i) => self.out[node].push(i),
                None => break,
            }
        }
    }
}

/// Uniform draw among alive indices not in `excluded`.
pub(crate) fn sample_excluding<R: Rng + ?Sized>(
    alive: &[bool],
    excluded: &[usize],
    rng: &mut R,
) -> Option<usize> {
    let candidates: Vec<usize> = alive
        .iter()
        .enumerate()
        .filter(|&(k, &a)| a && !excluded.contains(&k))
        .map(|(k, _)| k)
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_graph_respects_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = CreditGraph::random(50, 1, 0.25, &mut rng);
        for j in 0..50 {
            assert!(g.lenders_of(j).len() <= 1);
            assert!(!g.lenders_of(j).contains(&j));
        }
        assert_eq!(g.in_degrees().iter().sum::<usize>(), g.edge_count());
    }

    #[test]
    fn isolation_rate_is_roughly_a_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4000;
        let g = CreditGraph::random(n, 1, 0.25, &mut rng);
        let isolated = (0..n).filter(|&j| g.lenders_of(j).is_empty()).count() as f64 / n as f64;
        // 4 sigma of a binomial with p = 0.25.
        assert!((isolated - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn detach_removes_both_directions() {
        let mut g = CreditGraph::new(4, 1);
        g.add_edge(0, 1);
        g.add_edge(2, 1);
        g.add_edge(1, 3);
        g.detach(1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn draw_links_skips_dead_banks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = CreditGraph::new(3, 1);
        let alive = [true, false, true];
        for _ in 0..100 {
            g.draw_links(0, &alive, 0.0, &mut rng);
            assert_eq!(g.lenders_of(0), &[2]);
        }
    }
}

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::CreditGraph;

/// Topology summary of one credit-graph snapshot, computed over alive banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub centrality: f64,
    pub density: f64,
    pub diameter: usize,
    pub components: usize,
    pub avg_nodes_per_component: f64,
    pub max_in_degree: usize,
    /// `ddf[k] = P(in-degree ≥ k)` for `k = 0..=max_in_degree`.
    pub in_degree_ddf: Vec<f64>,
}

/// Centrality `Σ_i (k_max - k_i) / (N(N-1) - |V|)`, density `|V| / N(N-1)`,
/// and undirected connectivity: components (isolated banks included),
/// average component size and the largest finite diameter.
pub fn network_metrics(graph: &CreditGraph, alive: &[bool]) -> NetworkMetrics {
    let nodes: Vec<usize> = (0..graph.node_count()).filter(|&i| alive[i]).collect();
    let n = nodes.len();
    let in_deg = graph.in_degrees();
    let edges = graph.edge_count();

    let k_max = nodes.iter().map(|&i| in_deg[i]).max().unwrap_or(0);
    let pairs = (n * n.saturating_sub(1)) as f64;
    let (centrality, density) = if edges == 0 || n < 2 {
        (0.0, 0.0)
    } else {
        let spread: usize = nodes.iter().map(|&i| k_max - in_deg[i]).sum();
        (spread as f64 / (pairs - edges as f64), edges as f64 / pairs)
    };

    let adjacency = undirected_adjacency(graph);
    let mut component = vec![usize::MAX; graph.node_count()];
    let mut sizes = Vec::new();
    for &start in &nodes {
        if component[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &adjacency[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }

    let mut diameter = 0;
    for &s in &nodes {
        if sizes[component[s]] >= 2 {
            diameter = diameter.max(eccentricity(&adjacency, s));
        }
    }

    let mut ddf = vec![0.0; k_max + 1];
    if n > 0 {
        for (k, slot) in ddf.iter_mut().enumerate() {
            *slot = nodes.iter().filter(|&&i| in_deg[i] >= k).count() as f64 / n as f64;
        }
    }

    NetworkMetrics {
        centrality,
        density,
        diameter,
        components: sizes.len(),
        avg_nodes_per_component: if sizes.is_empty() {
            0.0
        } else {
            n as f64 / sizes.len() as f64
        },
        max_in_degree: k_max,
        in_degree_ddf: ddf,
    }
}

fn undirected_adjacency(graph: &CreditGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.node_count()];
    for (j, i) in graph.edges() {
        if !adj[j].contains(&i) {
            adj[j].push(i);
            adj[i].push(j);
        }
    }
    adj
}

fn eccentricity(adj: &[Vec<usize>], source: usize) -> usize {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let mut far = 0;
    while let Some(u) = queue.pop_front() {
        far = far.max(dist[u]);
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    far
}

/// The most connected lender at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubPoint {
    pub hub_id: usize,
    pub hub_id_normalized: f64,
    pub hub_in_degree: usize,
    pub hub_fitness: f64,
}

/// Alive bank with the largest in-degree, lowest id on ties.
pub fn hub(graph: &CreditGraph, alive: &[bool], fitness: &[f64]) -> HubPoint {
    let in_deg = graph.in_degrees();
    let mut best: Option<usize> = None;
    for i in (0..graph.node_count()).filter(|&i| alive[i]) {
        if best.map_or(true, |b| in_deg[i] > in_deg[b]) {
            best = Some(i);
        }
    }
    let id = best.unwrap_or(0);
    HubPoint {
        hub_id: id,
        hub_id_normalized: id as f64 / graph.node_count() as f64,
        hub_in_degree: in_deg.get(id).copied().unwrap_or(0),
        hub_fitness: fitness.get(id).copied().unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(n: usize, hub: usize) -> CreditGraph {
        let mut g = CreditGraph::new(n, 1);
        for j in (0..n).filter(|&j| j != hub) {
            g.add_edge(j, hub);
        }
        g
    }

    #[test]
    fn star_centrality_is_one() {
        let g = star(5, 0);
        let m = network_metrics(&g, &[true; 5]);
        assert_eq!(m.centrality, 1.0);
        assert_eq!(m.density, 4.0 / 20.0);
        assert_eq!(m.diameter, 2);
        assert_eq!(m.components, 1);
        assert_eq!(m.max_in_degree, 4);
    }

    #[test]
    fn empty_graph() {
        let g = CreditGraph::new(6, 1);
        let m = network_metrics(&g, &[true; 6]);
        assert_eq!(m.centrality, 0.0);
        assert_eq!(m.density, 0.0);
        assert_eq!(m.diameter, 0);
        assert_eq!(m.components, 6);
        assert_eq!(m.avg_nodes_per_component, 1.0);
    }

    #[test]
    fn two_disjoint_stars() {
        let mut g = CreditGraph::new(50, 1);
        for j in 1..25 {
            g.add_edge(j, 0);
        }
        for j in 26..50 {
            g.add_edge(j, 25);
        }
        let m = network_metrics(&g, &[true; 50]);
        assert_eq!(m.components, 2);
        assert_eq!(m.avg_nodes_per_component, 25.0);
        assert_eq!(m.diameter, 2);
    }

    #[test]
    fn chain_diameter() {
        let mut g = CreditGraph::new(5, 1);
        for j in 0..4 {
            g.add_edge(j, j + 1);
        }
        assert_eq!(network_metrics(&g, &[true; 5]).diameter, 4);
    }

    #[test]
    fn ddf_of_star() {
        let m = network_metrics(&star(5, 2), &[true; 5]);
        assert_eq!(m.in_degree_ddf, vec![1.0, 0.2, 0.2, 0.2, 0.2]);
    }

    #[test]
    fn hub_selection() {
        let g = star(6, 4);
        let fit = vec![0.1, 0.2, 0.3, 0.4, 1.0, 0.0];
        let h = hub(&g, &[true; 6], &fit);
        assert_eq!(h.hub_id, 4);
        assert_eq!(h.hub_in_degree, 5);
        assert_eq!(h.hub_fitness, 1.0);
        assert!((h.hub_id_normalized - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn hub_tie_goes_to_lowest_id() {
        let mut g = CreditGraph::new(10, 1);
        g.add_edge(0, 3);
        g.add_edge(1, 7);
        assert_eq!(hub(&g, &[true; 10], &[0.0; 10]).hub_id, 3);
    }
}

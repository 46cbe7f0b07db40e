use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::EpisodeTrace;
use crate::error::{Error, Result};

/// Longest run of steps with the same hub and the same `η`, for `η = 0`
/// and `η = 1`. Steps without a hub (no links) break runs. `None` when the
/// value of `η` never occurs with a hub.
pub fn hub_tenure(etas: &[u8], hubs: &[Option<usize>]) -> [Option<usize>; 2] {
    let mut best = [None, None];
    let mut run = 0;
    for k in 0..etas.len().min(hubs.len()) {
        let Some(h) = hubs[k] else {
            run = 0;
            continue;
        };
        let same = k > 0 && hubs[k - 1] == Some(h) && etas[k - 1] == etas[k];
        run = if same { run + 1 } else { 1 };
        let slot = &mut best[etas[k] as usize];
        *slot = Some(slot.map_or(run, |b: usize| b.max(run)));
    }
    best
}

fn hub_series(trace: &EpisodeTrace) -> Vec<Option<usize>> {
    trace
        .rows
        .iter()
        .map(|r| (r.hub_in_degree > 0).then_some(r.hub_id))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tenure {
    pub replica: usize,
    pub eta: u8,
    pub max_tenure: usize,
}

/// Longest hub tenure of every replica under each `η`.
pub fn hub_stability_distribution(traces: &[EpisodeTrace]) -> Vec<Tenure> {
    let mut out = Vec::new();
    for (replica, t) in traces.iter().enumerate() {
        let best = hub_tenure(&t.etas(), &hub_series(t));
        for eta in 0..2u8 {
            if let Some(max_tenure) = best[eta as usize] {
                out.push(Tenure {
                    replica,
                    eta,
                    max_tenure,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub eta: u8,
    pub bin_low: f64,
    pub bin_high: f64,
    pub density: f64,
}

/// Density histogram of tenures per `η` with bins `[k·w, (k+1)·w)`.
pub fn tenure_histogram(tenures: &[Tenure], bin_width: usize) -> Vec<HistogramBin> {
    let w = bin_width.max(1);
    let mut out = Vec::new();
    for eta in 0..2u8 {
        let v: Vec<usize> = tenures
            .iter()
            .filter(|t| t.eta == eta)
            .map(|t| t.max_tenure)
            .collect();
        let Some(&max) = v.iter().max() else { continue };
        let mut counts = vec![0usize; max / w + 1];
        for x in &v {
            counts[x / w] += 1;
        }
        let norm = (v.len() * w) as f64;
        out.extend(counts.iter().enumerate().map(|(k, &c)| HistogramBin {
            eta,
            bin_low: (k * w) as f64,
            bin_high: ((k + 1) * w) as f64,
            density: c as f64 / norm,
        }));
    }
    out
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::env::csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| crate::env::csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Maximum in-degree of `draws` random graphs that keep every node's
/// out-degree and pick its lenders uniformly among the other nodes.
pub fn degree_preserving_null(out_degrees: &[usize], draws: usize, seed: u64) -> Vec<usize> {
    let n = out_degrees.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indeg = vec![0usize; n];
    (0..draws)
        .map(|_| {
            indeg.iter_mut().for_each(|d| *d = 0);
            for (j, &k) in out_degrees.iter().enumerate() {
                let k = k.min(n.saturating_sub(1));
                for i in index::sample(&mut rng, n - 1, k) {
                    indeg[if i >= j { i + 1 } else { i }] += 1;
                }
            }
            indeg.iter().copied().max().unwrap_or(0)
        })
        .collect()
}

/// Nearest-rank quantile.
pub fn quantile(values: &[usize], q: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_unstable();
    if v.is_empty() {
        return 0;
    }
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeavyTail {
    pub observed_max: usize,
    pub null_p99: usize,
    pub exceeds: bool,
}

/// Compare the largest in-degree of the final network with the 99th
/// percentile of its degree-preserving null.
pub fn heavy_tail(trace: &EpisodeTrace, draws: usize, seed: u64) -> HeavyTail {
    let observed_max = trace.final_in_degrees.iter().copied().max().unwrap_or(0);
    let null_p99 = quantile(&degree_preserving_null(&trace.final_out_degrees, draws, seed), 0.99);
    HeavyTail {
        observed_max,
        null_p99,
        exceeds: observed_max > null_p99,
    }
}

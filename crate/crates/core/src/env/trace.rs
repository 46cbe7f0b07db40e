use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MarketEnv, MdpObservation, Policy, StepResult};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str =
    "step,eta,reward,liquidity,rationing,failures,leverage,channels,centrality,density,diameter,components";
pub const DETAIL_HEADER: &str = "step,avg_nodes_per_component,max_in_degree,hub_id,hub_id_normalized,hub_in_degree,hub_fitness,equity,bad_debt,fire_sales,loan_volume,c_max,c_min,r_max,c_avg,r_min,r_avg";
pub const EDGE_HEADER: &str = "step,borrower,lender";

/// One period of an episode, flattened for export and analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub eta: u8,
    pub reward: f64,
    pub liquidity: f64,
    pub rationing: f64,
    pub failures: usize,
    pub leverage: f64,
    pub channels: usize,
    pub centrality: f64,
    pub density: f64,
    pub diameter: usize,
    pub components: usize,
    pub avg_nodes_per_component: f64,
    pub max_in_degree: usize,
    pub hub_id: usize,
    pub hub_id_normalized: f64,
    pub hub_in_degree: usize,
    pub hub_fitness: f64,
    pub equity: f64,
    pub bad_debt: f64,
    pub fire_sales: f64,
    pub loan_volume: f64,
    /// Observation the step ended in.
    pub observation: MdpObservation,
}

impl TraceRow {
    pub fn from_step(step: usize, r: &StepResult) -> Self {
        let i = &r.info;
        TraceRow {
            step,
            eta: i.eta,
            reward: r.reward,
            liquidity: i.liquidity,
            rationing: i.rationing,
            failures: i.failures,
            leverage: i.leverage,
            channels: i.channels,
            centrality: i.network.centrality,
            density: i.network.density,
            diameter: i.network.diameter,
            components: i.network.components,
            avg_nodes_per_component: i.network.avg_nodes_per_component,
            max_in_degree: i.network.max_in_degree,
            hub_id: i.hub.hub_id,
            hub_id_normalized: i.hub.hub_id_normalized,
            hub_in_degree: i.hub.hub_in_degree,
            hub_fitness: i.hub.hub_fitness,
            equity: i.equity,
            bad_debt: i.bad_debt,
            fire_sales: i.fire_sales,
            loan_volume: i.loan_volume,
            observation: r.observation,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TraceCsv {
    step: usize,
    eta: u8,
    reward: f64,
    liquidity: f64,
    rationing: f64,
    failures: usize,
    leverage: f64,
    channels: usize,
    centrality: f64,
    density: f64,
    diameter: usize,
    components: usize,
}

#[derive(Serialize, Deserialize)]
struct DetailCsv {
    step: usize,
    avg_nodes_per_component: f64,
    max_in_degree: usize,
    hub_id: usize,
    hub_id_normalized: f64,
    hub_in_degree: usize,
    hub_fitness: f64,
    equity: f64,
    bad_debt: f64,
    fire_sales: f64,
    loan_volume: f64,
    c_max: f64,
    c_min: f64,
    r_max: f64,
    c_avg: f64,
    r_min: f64,
    r_avg: f64,
}

/// A full episode: its seed, the observation it started from, one row per
/// period and periodic edge-list snapshots `(step, borrower, lender)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub initial: MdpObservation,
    pub rows: Vec<TraceRow>,
    pub edges: Vec<(usize, usize, usize)>,
    /// In-degree of every bank at the last step, failed banks excluded.
    pub final_in_degrees: Vec<usize>,
    /// Out-degree of every alive bank at the last step.
    pub final_out_degrees: Vec<usize>,
}

impl EpisodeTrace {
    pub fn cumulative_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.reward).sum()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn etas(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.eta).collect()
    }

    /// Observations the policy acted on: the initial one, then the end
    /// state of every period but the last.
    pub fn decision_observations(&self) -> Vec<MdpObservation> {
        std::iter::once(self.initial)
            .chain(self.rows.iter().map(|r| r.observation))
            .take(self.rows.len())
            .collect()
    }

    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        for r in &self.rows {
            w.serialize(TraceCsv {
                step: r.step,
                eta: r.eta,
                reward: r.reward,
                liquidity: r.liquidity,
                rationing: r.rationing,
                failures: r.failures,
                leverage: r.leverage,
                channels: r.channels,
                centrality: r.centrality,
                density: r.density,
                diameter: r.diameter,
                components: r.components,
            })
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_details(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        for r in &self.rows {
            let o = &r.observation;
            w.serialize(DetailCsv {
                step: r.step,
                avg_nodes_per_component: r.avg_nodes_per_component,
                max_in_degree: r.max_in_degree,
                hub_id: r.hub_id,
                hub_id_normalized: r.hub_id_normalized,
                hub_in_degree: r.hub_in_degree,
                hub_fitness: r.hub_fitness,
                equity: r.equity,
                bad_debt: r.bad_debt,
                fire_sales: r.fire_sales,
                loan_volume: r.loan_volume,
                c_max: o.c_max,
                c_min: o.c_min,
                r_max: o.r_max,
                c_avg: o.c_avg,
                r_min: o.r_min,
                r_avg: o.r_avg,
            })
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_edges(&self, path: &Path) -> Result<()> {
        let mut w = writer(path)?;
        w.write_record(EDGE_HEADER.split(',')).map_err(|e| csv_err(path, e))?;
        for &(s, j, i) in &self.edges {
            w.serialize((s, j, i)).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Rebuild rows from a trace file and its details file. Edge snapshots
    /// and the initial observation are not part of either file.
    pub fn read_rows(trace: &Path, details: &Path) -> Result<Vec<TraceRow>> {
        let main: Vec<TraceCsv> = read_all(trace)?;
        let extra: Vec<DetailCsv> = read_all(details)?;
        if main.len() != extra.len() {
            return Err(Error::format(details, "row count differs from the trace file"));
        }
        main.into_iter()
            .zip(extra)
            .map(|(a, b)| {
                if a.step != b.step {
                    return Err(Error::format(details, format!("step {} misaligned", b.step)));
                }
                Ok(TraceRow {
                    step: a.step,
                    eta: a.eta,
                    reward: a.reward,
                    liquidity: a.liquidity,
                    rationing: a.rationing,
                    failures: a.failures,
                    leverage: a.leverage,
                    channels: a.channels,
                    centrality: a.centrality,
                    density: a.density,
                    diameter: a.diameter,
                    components: a.components,
                    avg_nodes_per_component: b.avg_nodes_per_component,
                    max_in_degree: b.max_in_degree,
                    hub_id: b.hub_id,
                    hub_id_normalized: b.hub_id_normalized,
                    hub_in_degree: b.hub_in_degree,
                    hub_fitness: b.hub_fitness,
                    equity: b.equity,
                    bad_debt: b.bad_debt,
                    fire_sales: b.fire_sales,
                    loan_volume: b.loan_volume,
                    observation: MdpObservation {
                        c_max: b.c_max,
                        c_min: b.c_min,
                        r_max: b.r_max,
                        c_avg: b.c_avg,
                        r_min: b.r_min,
                        r_avg: b.r_avg,
                    },
                })
            })
            .collect()
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn read_all<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

/// Play one episode of `env` under `policy` from `seed`.
pub fn run_episode<P: Policy + ?Sized>(
    env: &mut MarketEnv,
    policy: &mut P,
    seed: u64,
) -> Result<EpisodeTrace> {
    let mut obs = env.reset(seed);
    policy.reset(seed);
    let every = env.config().env.snapshot_every;
    let mut trace = EpisodeTrace {
        seed,
        initial: obs,
        rows: Vec::with_capacity(env.horizon()),
        edges: Vec::new(),
        final_in_degrees: Vec::new(),
        final_out_degrees: Vec::new(),
    };
    loop {
        let r = env.step(policy.act(&obs))?;
        let step = env.t();
        trace.rows.push(TraceRow::from_step(step, &r));
        if every > 0 && step % every == 0 {
            trace.edges.extend(env.market().graph.edges().map(|(j, i)| (step, j, i)));
        }
        obs = r.observation;
        if r.done {
            break;
        }
    }
    let m = env.market();
    let deg = m.graph.in_degrees();
    let alive: Vec<usize> = (0..m.n()).filter(|&i| m.banks[i].alive).collect();
    trace.final_in_degrees = alive.iter().map(|&i| deg[i]).collect();
    trace.final_out_degrees = alive.iter().map(|&i| m.graph.lenders_of(i).len()).collect();
    Ok(trace)
}

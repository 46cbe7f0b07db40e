use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::{
    run_episode, BernoulliPolicy, EpisodeTrace, FixedPolicy, MarketEnv, Policy, SimConfig,
    TraceRow,
};
use crate::error::{Error, Result};
use crate::ppo::{mean_std, Checkpoint, GreedyPolicy, Mlp};

/// How `η` is chosen during an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Fair coin every step.
    Random,
    Fixed(u8),
    /// Greedy policy of a saved agent.
    Checkpoint(PathBuf),
}

impl Strategy {
    /// Short name used for directories and table columns.
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Fixed(0) => "fixed0",
            Strategy::Fixed(_) => "fixed1",
            Strategy::Checkpoint(_) => "learned",
        }
    }

    pub fn resolve(&self) -> Result<PolicySpec> {
        Ok(match self {
            Strategy::Random => PolicySpec::Bernoulli(0.5),
            Strategy::Fixed(e) => PolicySpec::Fixed(*e),
            Strategy::Checkpoint(path) => PolicySpec::Greedy(Checkpoint::load(path)?.actor),
        })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Checkpoint(p) => write!(f, "checkpoint:{}", p.display()),
            s => f.write_str(s.label()),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "bernoulli" => Ok(Strategy::Random),
            "fixed0" => Ok(Strategy::Fixed(0)),
            "fixed1" => Ok(Strategy::Fixed(1)),
            _ => match s.strip_prefix("checkpoint:") {
                Some(p) if !p.is_empty() => Ok(Strategy::Checkpoint(PathBuf::from(p))),
                _ => Err(Error::InvalidInput(format!(
                    "unknown strategy `{s}` (expected random, fixed0, fixed1 or checkpoint:<path>)"
                ))),
            },
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A strategy with everything it needs loaded in memory.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Fixed(u8),
    Bernoulli(f64),
    Greedy(Mlp),
}

impl PolicySpec {
    pub fn build(&self) -> Box<dyn Policy + Send> {
        match self {
            PolicySpec::Fixed(e) => Box::new(FixedPolicy(*e)),
            PolicySpec::Bernoulli(p) => Box::new(BernoulliPolicy::new(*p)),
            PolicySpec::Greedy(actor) => Box::new(GreedyPolicy::new(actor.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub strategy: Strategy,
    pub replicas: usize,
    /// Replica `r` runs from seed `seed + r`.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replicas as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Config("experiment.replicas must be at least 1".into()));
        }
        self.sim.validate().map_err(Error::Config)
    }
}

/// Per-replica averages over time, plus the totals the tables need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub seed: u64,
    pub cumulative_reward: f64,
    pub liquidity_mean: f64,
    pub liquidity_total: f64,
    pub rationing_mean: f64,
    pub failures_mean: f64,
    pub failures_total: usize,
    pub leverage_mean: f64,
    pub channels_mean: f64,
    pub centrality_mean: f64,
    pub density_mean: f64,
    pub diameter_mean: f64,
    pub equity_mean: f64,
    pub bad_debt_mean: f64,
    pub eta_mean: f64,
    /// Largest share of banks lending to one hub in any period.
    pub hub_share_max: f64,
}

impl ReplicaSummary {
    pub fn from_trace(replica: usize, trace: &EpisodeTrace, n_banks: usize) -> Self {
        let rows = &trace.rows;
        let t = rows.len().max(1) as f64;
        let mean = |f: fn(&TraceRow) -> f64| rows.iter().map(f).sum::<f64>() / t;
        ReplicaSummary {
            replica,
            seed: trace.seed,
            cumulative_reward: trace.cumulative_reward(),
            liquidity_mean: mean(|r| r.liquidity),
            liquidity_total: rows.iter().map(|r| r.liquidity).sum(),
            rationing_mean: mean(|r| r.rationing),
            failures_mean: mean(|r| r.failures as f64),
            failures_total: rows.iter().map(|r| r.failures).sum(),
            leverage_mean: mean(|r| r.leverage),
            channels_mean: mean(|r| r.channels as f64),
            centrality_mean: mean(|r| r.centrality),
            density_mean: mean(|r| r.density),
            diameter_mean: mean(|r| r.diameter as f64),
            equity_mean: mean(|r| r.equity),
            bad_debt_mean: mean(|r| r.bad_debt),
            eta_mean: mean(|r| r.eta as f64),
            hub_share_max: rows
                .iter()
                .map(|r| r.hub_in_degree as f64 / n_banks as f64)
                .fold(0.0, f64::max),
        }
    }
}

/// Columns averaged across replicas in the aggregate file.
pub const AGGREGATE_COLUMNS: [&str; 15] = [
    "eta",
    "reward",
    "liquidity",
    "rationing",
    "failures",
    "leverage",
    "channels",
    "centrality",
    "density",
    "diameter",
    "components",
    "equity",
    "bad_debt",
    "max_in_degree",
    "hub_in_degree",
];

fn column(r: &TraceRow, c: usize) -> f64 {
    match c {
        0 => r.eta as f64,
        1 => r.reward,
        2 => r.liquidity,
        3 => r.rationing,
        4 => r.failures as f64,
        5 => r.leverage,
        6 => r.channels as f64,
        7 => r.centrality,
        8 => r.density,
        9 => r.diameter as f64,
        10 => r.components as f64,
        11 => r.equity,
        12 => r.bad_debt,
        13 => r.max_in_degree as f64,
        14 => r.hub_in_degree as f64,
        _ => unreachable!(),
    }
}

/// Mean and standard deviation across replicas of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub step: usize,
    pub mean: [f64; 15],
    pub std: [f64; 15],
}

pub fn aggregate(traces: &[EpisodeTrace]) -> Vec<AggregateRow> {
    let steps = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    (0..steps)
        .map(|k| {
            let mut mean = [0.0; 15];
            let mut std = [0.0; 15];
            for c in 0..15 {
                let v: Vec<f64> = traces.iter().map(|t| column(&t.rows[k], c)).collect();
                (mean[c], std[c]) = mean_std(&v);
            }
            AggregateRow {
                step: traces[0].rows[k].step,
                mean,
                std,
            }
        })
        .collect()
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::env::csv_err(path, e))?;
    let mut header = vec!["step".to_string()];
    for c in AGGREGATE_COLUMNS {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    w.write_record(&header).map_err(|e| crate::env::csv_err(path, e))?;
    for r in rows {
        let mut rec = vec![r.step.to_string()];
        for c in 0..15 {
            rec.push(r.mean[c].to_string());
            rec.push(r.std[c].to_string());
        }
        w.write_record(&rec).map_err(|e| crate::env::csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summaries(path: &Path, rows: &[ReplicaSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::env::csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| crate::env::csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summaries(path: &Path) -> Result<Vec<ReplicaSummary>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| crate::env::csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| crate::env::csv_err(path, e)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub traces: Vec<EpisodeTrace>,
    pub summaries: Vec<ReplicaSummary>,
    pub aggregate: Vec<AggregateRow>,
    /// Every file written, in a fixed order.
    pub files: Vec<PathBuf>,
}

/// Directory of replica `r` below an experiment directory.
pub fn replica_dir(out: &Path, r: usize) -> PathBuf {
    out.join(format!("replica_{r:03}"))
}

/// Resolve the strategy and run the experiment.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutput> {
    let policy = cfg.strategy.resolve()?;
    run_experiment_with(cfg, &policy, out)
}

/// `cfg.replicas` independent episodes under `policy`. With `out`, every
/// replica gets a trace, details and edges file, and the directory gets
/// `aggregate.csv`, `summary.csv` and an `experiment.toml` echo.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    policy: &PolicySpec,
    out: Option<&Path>,
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let traces = cfg
        .seeds()
        .into_par_iter()
        .enumerate()
        .map(|(r, seed)| {
            let mut env = MarketEnv::new(cfg.sim.clone());
            let mut p = policy.build();
            let wrap = |e| Error::Replica {
                replica: r,
                source: Box::new(e),
            };
            let trace = run_episode(&mut env, &mut p, seed).map_err(wrap)?;
            if let Some(dir) = out {
                write_replica(&replica_dir(dir, r), &trace).map_err(wrap)?;
            }
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = cfg.sim.market.n_banks;
    let summaries: Vec<ReplicaSummary> = traces
        .iter()
        .enumerate()
        .map(|(r, t)| ReplicaSummary::from_trace(r, t, n))
        .collect();
    let aggregate = aggregate(&traces);
    let mut files = Vec::new();
    if let Some(dir) = out {
        for r in 0..traces.len() {
            let d = replica_dir(dir, r);
            files.extend(REPLICA_FILES.iter().map(|f| d.join(f)));
        }
        let p = dir.join("aggregate.csv");
        write_aggregate(&p, &aggregate)?;
        files.push(p);
        let p = dir.join("summary.csv");
        write_summaries(&p, &summaries)?;
        files.push(p);
        let p = dir.join("experiment.toml");
        let text = toml::to_string(cfg).map_err(|e| Error::format(&p, e.to_string()))?;
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        files.push(p);
    }
    Ok(ExperimentOutput {
        traces,
        summaries,
        aggregate,
        files,
    })
}

pub const REPLICA_FILES: [&str; 3] = ["trace.csv", "details.csv", "edges.csv"];

fn write_replica(dir: &Path, trace: &EpisodeTrace) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    trace.write_trace(&dir.join(REPLICA_FILES[0]))?;
    trace.write_details(&dir.join(REPLICA_FILES[1]))?;
    trace.write_edges(&dir.join(REPLICA_FILES[2]))
}

/// Write plain text, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

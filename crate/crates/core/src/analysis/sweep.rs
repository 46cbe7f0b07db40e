use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::{run_experiment_with, ExperimentConfig, PolicySpec, Strategy};
use crate::env::SimConfig;
use crate::error::{Error, Result};
use crate::ppo::mean_std;

/// Model parameter varied by a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Intensity of choice of the link rule.
    Beta,
    /// Fire-sale price.
    Rho,
    /// Width of the deposit-shock band.
    Omega,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 3] = [Self::Beta, Self::Rho, Self::Omega];

    pub fn name(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Rho => "rho",
            Self::Omega => "omega",
        }
    }

    /// The default grid: β = 0, 2, …, 40; ρ = 0.1, …, 0.5; ω = 0.52, …, 0.60.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Self::Beta => (0..=20).map(|i| 2.0 * i as f64).collect(),
            Self::Rho => (1..=5).map(|i| i as f64 / 10.0).collect(),
            Self::Omega => (0..=4).map(|i| (52 + 2 * i) as f64 / 100.0).collect(),
        }
    }

    /// Inclusive range a grid may cover.
    pub fn range(self) -> (f64, f64) {
        match self {
            Self::Beta => (0.0, 40.0),
            Self::Rho => (0.1, 0.5),
            Self::Omega => (0.52, 0.60),
        }
    }

    pub fn apply(self, sim: &mut SimConfig, value: f64) {
        match self {
            Self::Beta => sim.network.intensity_of_choice = value,
            Self::Rho => sim.market.fire_sale_price = value,
            Self::Omega => sim.market.deposit_omega = value,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: f64,
    pub strategy: String,
    pub replicas: usize,
    pub cumulative_reward_mean: f64,
    pub cumulative_reward_std: f64,
    pub liquidity: f64,
    pub channels: f64,
    pub leverage: f64,
    pub rationing: f64,
    pub failures: f64,
}

/// Run `base` at every grid value of `parameter` under each strategy.
/// Rows come grid-major, strategies in the given order.
pub fn sweep(
    base: &ExperimentConfig,
    parameter: SweepParameter,
    grid: &[f64],
    strategies: &[(Strategy, PolicySpec)],
) -> Result<Vec<SweepRow>> {
    let (lo, hi) = parameter.range();
    if let Some(v) = grid.iter().find(|&&v| !(v >= lo - 1e-9 && v <= hi + 1e-9)) {
        return Err(Error::InvalidInput(format!(
            "{parameter} = {v} outside [{lo}, {hi}]"
        )));
    }
    let mut rows = Vec::with_capacity(grid.len() * strategies.len());
    for &value in grid {
        for (strategy, policy) in strategies {
            let mut cfg = base.clone();
            cfg.strategy = strategy.clone();
            parameter.apply(&mut cfg.sim, value);
            let out = run_experiment_with(&cfg, policy, None)?;
            let s = &out.summaries;
            let avg = |f: fn(&super::ReplicaSummary) -> f64| {
                s.iter().map(f).sum::<f64>() / s.len() as f64
            };
            let rewards: Vec<f64> = s.iter().map(|r| r.cumulative_reward).collect();
            let (m, sd) = mean_std(&rewards);
            rows.push(SweepRow {
                parameter,
                value,
                strategy: strategy.label().to_string(),
                replicas: s.len(),
                cumulative_reward_mean: m,
                cumulative_reward_std: sd,
                liquidity: avg(|r| r.liquidity_mean),
                channels: avg(|r| r.channels_mean),
                leverage: avg(|r| r.leverage_mean),
                rationing: avg(|r| r.rationing_mean),
                failures: avg(|r| r.failures_mean),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::env::csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| crate::env::csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

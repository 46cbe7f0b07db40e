//! Monte Carlo experiments over the market and the statistics run on
//! their traces.

mod experiment;
pub mod report;
mod stats;
mod sweep;
mod topology;

pub use experiment::{
    aggregate, read_summaries, replica_dir, run_experiment, run_experiment_with, write_aggregate,
    write_summaries, write_text, AggregateRow, ExperimentConfig, ExperimentOutput, PolicySpec,
    ReplicaSummary, Strategy, AGGREGATE_COLUMNS, REPLICA_FILES,
};
pub use stats::{
    categorical_regression, ks_two_sample, lagged_correlation, pearson, rolling, simple_ols,
    stars, KsResult, LagCorrelation, RegressionResult, Rolling,
};
pub use sweep::{sweep, write_sweep_csv, SweepParameter, SweepRow};
pub use topology::{
    degree_preserving_null, heavy_tail, hub_stability_distribution, hub_tenure, quantile,
    tenure_histogram, write_csv, HeavyTail, HistogramBin, Tenure,
};

use serde::Serialize;

use crate::env::TraceRow;
use crate::error::Result;

/// Network measures regressed on `η` and used as regressors for stability.
pub const NETWORK_MEASURES: [&str; 5] = [
    "centrality",
    "density",
    "diameter",
    "components",
    "avg_nodes_per_component",
];

/// Market outcomes regressed on `η`.
pub const MACRO_VARIABLES: [&str; 6] =
    ["liquidity", "equity", "leverage", "rationing", "bad_debt", "failures"];

/// Dependent variables of the stability regressions.
pub const STABILITY_INDICATORS: [&str; 3] = ["rationing", "failures", "leverage"];

/// One named column of a trace, `None` for an unknown name.
pub fn series(rows: &[TraceRow], name: &str) -> Option<Vec<f64>> {
    let f: fn(&TraceRow) -> f64 = match name {
        "eta" => |r| r.eta as f64,
        "reward" => |r| r.reward,
        "liquidity" => |r| r.liquidity,
        "rationing" => |r| r.rationing,
        "failures" => |r| r.failures as f64,
        "leverage" => |r| r.leverage,
        "channels" => |r| r.channels as f64,
        "centrality" => |r| r.centrality,
        "density" => |r| r.density,
        "diameter" => |r| r.diameter as f64,
        "components" => |r| r.components as f64,
        "avg_nodes_per_component" => |r| r.avg_nodes_per_component,
        "max_in_degree" => |r| r.max_in_degree as f64,
        "hub_in_degree" => |r| r.hub_in_degree as f64,
        "equity" => |r| r.equity,
        "bad_debt" => |r| r.bad_debt,
        "fire_sales" => |r| r.fire_sales,
        "loan_volume" => |r| r.loan_volume,
        _ => return None,
    };
    Some(rows.iter().map(f).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionRow {
    /// Filled in by reports that pool several experiments.
    pub strategy: String,
    /// `categorical` or `ols`.
    pub kind: &'static str,
    pub y: String,
    pub x: String,
    pub b0: f64,
    pub t0: f64,
    pub b1: f64,
    pub t1: f64,
    pub stars1: &'static str,
    pub r2: f64,
    pub n: usize,
}

impl RegressionRow {
    fn new(kind: &'static str, y: &str, x: &str, r: &RegressionResult) -> Self {
        RegressionRow {
            strategy: String::new(),
            kind,
            y: y.to_string(),
            x: x.to_string(),
            b0: r.b0,
            t0: r.t0,
            b1: r.b1,
            t1: r.t1,
            stars1: r.stars1(),
            r2: r.r2,
            n: r.n,
        }
    }
}

/// Categorical regressions of each variable on `η` over pooled rows.
pub fn categorical_table(rows: &[TraceRow], variables: &[&str]) -> Result<Vec<RegressionRow>> {
    let eta: Vec<u8> = rows.iter().map(|r| r.eta).collect();
    variables
        .iter()
        .map(|&v| {
            let y = series(rows, v).ok_or_else(|| unknown(v))?;
            let r = categorical_regression(&y, &eta)?;
            Ok(RegressionRow::new("categorical", v, "1-eta", &r))
        })
        .collect()
}

/// Univariate OLS of every stability indicator on every network measure.
/// Pairs whose regressor has no variance are skipped.
pub fn stability_table(rows: &[TraceRow]) -> Result<Vec<RegressionRow>> {
    let mut out = Vec::new();
    for x in NETWORK_MEASURES {
        let xs = series(rows, x).ok_or_else(|| unknown(x))?;
        for y in STABILITY_INDICATORS {
            let ys = series(rows, y).ok_or_else(|| unknown(y))?;
            match simple_ols(&ys, &xs) {
                Ok(r) => out.push(RegressionRow::new("ols", y, x, &r)),
                Err(crate::Error::DegenerateRegressor(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn unknown(name: &str) -> crate::Error {
    crate::Error::InvalidInput(format!("unknown series `{name}`"))
}

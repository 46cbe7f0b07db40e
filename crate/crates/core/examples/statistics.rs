//! Regressions, rolling moments, lagged correlations and a KS test on the
//! pooled traces of a few random-policy replicas.
//!
//!     cargo run --release --example statistics

use interbank::analysis::{
    categorical_table, ks_two_sample, lagged_correlation, rolling, run_experiment, series,
    stability_table, ExperimentConfig, Strategy, NETWORK_MEASURES,
};
use interbank::env::{SimConfig, TraceRow};

fn main() -> interbank::Result<()> {
    let mut sim = SimConfig::default();
    sim.env.horizon = 300;
    let cfg = ExperimentConfig { sim, strategy: Strategy::Random, replicas: 4, seed: 100 };
    let out = run_experiment(&cfg, None)?;
    let rows: Vec<TraceRow> = out.traces.iter().flat_map(|t| t.rows.clone()).collect();

    println!("network measures on (1 - eta):");
    for r in categorical_table(&rows, &NETWORK_MEASURES)? {
        println!("  {:<24} b0 {:>10.4} b1 {:>10.4}{:<3} t {:>6.2}", r.y, r.b0, r.b1, r.stars1, r.t1);
    }
    println!("stability indicators on network measures:");
    for r in stability_table(&rows)?.iter().take(6) {
        println!("  {:<10} on {:<12} b1 {:>10.4}{:<3} r2 {:.3}", r.y, r.x, r.b1, r.stars1, r.r2);
    }

    let first = &out.traces[0].rows;
    let liquidity = series(first, "liquidity").unwrap();
    let roll = rolling(&liquidity, 50)?;
    println!("liquidity, 50-step rolling mean at the end: {:.1} (std {:.1})", roll.mean.last().unwrap(), roll.std.last().unwrap());

    let failures = series(first, "failures").unwrap();
    for c in lagged_correlation(&liquidity, &failures, 3)? {
        println!("  corr(liquidity_t, failures_t{:+}) = {:?}{}", c.lag, c.corr.map(|x| (x * 1000.0).round() / 1000.0), if c.significant { " *" } else { "" });
    }

    let (a, b): (Vec<f64>, Vec<f64>) = (
        out.traces[0].rows.iter().map(|r| r.rationing).collect(),
        out.traces[1].rows.iter().map(|r| r.rationing).collect(),
    );
    let ks = ks_two_sample(&a, &b)?;
    println!("KS rationing, replica 0 vs 1: D {:.3}, p {:.3}", ks.d, ks.p_value);
    Ok(())
}

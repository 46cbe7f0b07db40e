//! Sweep the intensity of choice and see how the fixed recommendations
//! respond.
//!
//!     cargo run --release --example sensitivity_sweep

use interbank::analysis::{sweep, ExperimentConfig, PolicySpec, Strategy, SweepParameter};
use interbank::env::SimConfig;

fn main() -> interbank::Result<()> {
    let mut sim = SimConfig::default();
    sim.env.horizon = 150;
    let base = ExperimentConfig { sim, strategy: Strategy::Random, replicas: 4, seed: 0 };
    let strategies = [
        (Strategy::Fixed(0), PolicySpec::Fixed(0)),
        (Strategy::Fixed(1), PolicySpec::Fixed(1)),
    ];
    let rows = sweep(&base, SweepParameter::Beta, &[0.0, 2.0, 5.0, 10.0, 20.0], &strategies)?;
    println!("{:>6} {:>8} {:>12} {:>10} {:>9}", "beta", "strategy", "fitness", "liquidity", "rationing");
    for r in rows {
        println!(
            "{:>6} {:>8} {:>12.1} {:>10.1} {:>9.3}",
            r.value, r.strategy, r.cumulative_reward_mean, r.liquidity, r.rationing
        );
    }
    Ok(())
}

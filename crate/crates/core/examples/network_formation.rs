//! Watch the lending network concentrate under each recommendation: hub
//! size over time and the final in-degree tail against a rewired null.
//!
//!     cargo run --release --example network_formation

use interbank::analysis::heavy_tail;
use interbank::env::{run_episode, FixedPolicy, MarketEnv, SimConfig};

fn main() -> interbank::Result<()> {
    let mut sim = SimConfig::default();
    sim.env.horizon = 300;
    let n = sim.market.n_banks;
    for eta in [0u8, 1] {
        let mut env = MarketEnv::new(sim.clone());
        let trace = run_episode(&mut env, &mut FixedPolicy(eta), 11)?;
        println!("eta = {eta}");
        for r in trace.rows.iter().filter(|r| r.step % 50 == 0) {
            println!(
                "  step {:>3}: hub {:>2} serves {:>2}/{n}, density {:.4}, diameter {}, components {}",
                r.step, r.hub_id, r.hub_in_degree, r.density, r.diameter, r.components
            );
        }
        let tail = heavy_tail(&trace, 1000, 5);
        println!(
            "  final max in-degree {} vs null 99th percentile {} (heavy tail: {})",
            tail.observed_max, tail.null_p99, tail.exceeds
        );
    }
    Ok(())
}

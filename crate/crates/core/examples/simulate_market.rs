//! One episode of the market under a fixed recommendation, printed every
//! 25 periods.
//!
//!     cargo run --release --example simulate_market -- [eta] [seed]

use interbank::env::{run_episode, FixedPolicy, MarketEnv, SimConfig};

fn main() -> interbank::Result<()> {
    let mut args = std::env::args().skip(1);
    let eta: u8 = args.next().map_or(0, |a| a.parse().expect("eta is 0 or 1"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let mut sim = SimConfig::default();
    sim.env.horizon = 200;
    let mut env = MarketEnv::new(sim);
    let trace = run_episode(&mut env, &mut FixedPolicy(eta), seed)?;

    println!("{:>5} {:>10} {:>10} {:>9} {:>8} {:>9}", "step", "fitness", "liquidity", "rationing", "failures", "leverage");
    for r in trace.rows.iter().filter(|r| r.step % 25 == 0) {
        println!(
            "{:>5} {:>10.3} {:>10.1} {:>9.3} {:>8} {:>9.3}",
            r.step, r.reward, r.liquidity, r.rationing, r.failures, r.leverage
        );
    }
    println!("cumulative fitness {:.1}", trace.cumulative_reward());
    Ok(())
}

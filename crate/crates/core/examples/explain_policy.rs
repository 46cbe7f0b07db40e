//! Exact Shapley attributions for a policy network: a quickly trained
//! actor explained on states from a random-policy episode.
//!
//!     cargo run --release --example explain_policy

use interbank::config::Config;
use interbank::env::{run_episode, BernoulliPolicy, MarketEnv, MdpObservation};
use interbank::explain::{explain_actor, shap_summary};
use interbank::ppo::{best_instance, train};

fn main() -> interbank::Result<()> {
    let mut cfg = Config::default();
    cfg.env.horizon = 150;
    cfg.ppo.episodes = 10;
    cfg.ppo.eval_interval = 5;
    cfg.ppo.instances = 1;
    cfg.ppo.eval_episodes = 2;
    let outcomes = train(&cfg.sim(), &cfg.ppo);
    let best = best_instance(&outcomes).expect("training failed");
    let actor = &outcomes[best].as_ref().unwrap().checkpoint.actor;

    let mut env = MarketEnv::new(cfg.sim());
    let trace = run_episode(&mut env, &mut BernoulliPolicy::new(0.5), 3)?;
    let states = trace.decision_observations();
    let result = explain_actor(actor, &states[..50], &states)?;

    let s = &result.samples[0];
    let total: f64 = s.shapley.phi.iter().sum();
    println!(
        "sample 0, P(eta={}): {:.4} = base {:.4} + sum(phi) {:.4}",
        s.class, s.shapley.value, s.shapley.base_value, total
    );
    for r in shap_summary(&result, &MdpObservation::NAMES) {
        println!("class {} #{} {:<10} mean |phi| {:.2e}", r.class, r.rank, r.feature, r.mean_abs_phi);
    }
    Ok(())
}

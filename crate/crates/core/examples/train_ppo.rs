//! Train a small PPO agent to recommend eta and compare it with the coin
//! flip baseline on held-out seeds.
//!
//!     cargo run --release --example train_ppo -- [episodes]

use interbank::config::Config;
use interbank::env::BernoulliPolicy;
use interbank::ppo::{best_instance, evaluate, train, GreedyPolicy};

fn main() -> interbank::Result<()> {
    let episodes = std::env::args().nth(1).map_or(30, |a| a.parse().expect("episodes"));
    let mut cfg = Config::default();
    cfg.env.horizon = 200;
    cfg.ppo.episodes = episodes;
    cfg.ppo.eval_interval = 10;
    cfg.ppo.instances = 2;
    cfg.ppo.eval_episodes = 3;
    let sim = cfg.sim();

    let outcomes = train(&sim, &cfg.ppo);
    for o in outcomes.iter().flatten() {
        let last = o.curve.last().expect("curve");
        println!("instance {}: final eval {:.1} ± {:.1}", o.instance, last.eval_mean, last.eval_std);
    }
    let best = best_instance(&outcomes).expect("no instance finished");
    let actor = outcomes[best].as_ref().unwrap().checkpoint.actor.clone();

    let seeds: Vec<u64> = (500..505).collect();
    let learned = evaluate(|| GreedyPolicy::new(actor.clone()), &sim, &seeds)?;
    let random = evaluate(|| BernoulliPolicy::new(0.5), &sim, &seeds)?;
    println!("best instance {best}");
    println!("learned {:.1} ± {:.1}, eta shares {:?}", learned.mean, learned.std, learned.eta_frequencies());
    println!("random  {:.1} ± {:.1}", random.mean, random.std);
    Ok(())
}

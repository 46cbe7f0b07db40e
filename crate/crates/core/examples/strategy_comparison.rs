//! Write simulate runs for the baseline strategies into a run directory
//! and build the comparison report from them.
//!
//!     cargo run --release --example strategy_comparison -- [run_dir]

use std::path::PathBuf;

use interbank::analysis::report::{build_report, render_text};
use interbank::analysis::{run_experiment, ExperimentConfig, Strategy};
use interbank::env::SimConfig;
use interbank::manifest::{timestamp, RunManifest};

fn main() -> interbank::Result<()> {
    let run_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("interbank-comparison"));
    let mut sim = SimConfig::default();
    sim.env.horizon = 200;

    for strategy in [Strategy::Fixed(0), Strategy::Fixed(1), Strategy::Random] {
        let out_dir = run_dir.join(strategy.label());
        std::fs::create_dir_all(&out_dir).map_err(|e| interbank::Error::io(&out_dir, e))?;
        let cfg = ExperimentConfig { sim: sim.clone(), strategy, replicas: 6, seed: 0 };
        let started = timestamp();
        let out = run_experiment(&cfg, Some(&out_dir))?;
        let mut m = RunManifest::new("simulate", String::new(), cfg.seeds(), started);
        m.add_files(&out_dir, &out.files)?;
        m.finish(&out_dir)?;
    }
    let report = build_report(&run_dir)?;
    print!("{}", render_text(&report));
    println!("runs written to {}", run_dir.display());
    Ok(())
}

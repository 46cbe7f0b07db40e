//! Command-line front end. Every command writes into its output directory
//! and finishes with a `manifest.json` listing what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::report::{build_report, read_experiment_traces, write_report};
use crate::analysis::{
    run_experiment, sweep, write_sweep_csv, write_text, ExperimentConfig, Strategy,
    SweepParameter,
};
use crate::config::Config;
use crate::env::{BernoulliPolicy, MdpObservation};
use crate::error::{Error, Result};
use crate::explain::{explain_actor, shap_summary, write_ranking_csv, write_shap_csv};
use crate::manifest::{timestamp, RunManifest};
use crate::ppo::{best_instance, evaluate, train, write_learning_curve, Checkpoint, GreedyPolicy};

#[derive(Debug, Parser)]
#[command(name = "interbank", version, about = "Interbank credit market experiments")]
pub struct Cli {
    /// TOML configuration; defaults to the reference calibration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Monte Carlo replicas under one strategy.
    Simulate(SimulateArgs),
    /// Train PPO instances and select the best one.
    Train(TrainArgs),
    /// Compare a checkpoint with the random baseline on evaluation seeds.
    Evaluate(EvaluateArgs),
    /// Shapley attributions of a checkpoint's action probabilities.
    Explain(ExplainArgs),
    /// Sensitivity sweep over one model parameter.
    Sweep(SweepArgs),
    /// Consolidated tables from a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// random, fixed0, fixed1 or checkpoint:<path>
    #[arg(long)]
    pub strategy: String,
    /// Seed of replica 0 (default: experiment.seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replicas (default: experiment.replicas).
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Run directory; results go to `<out>/<strategy>/`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluation episodes (default: ppo.eval_episodes).
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Experiment directory holding `replica_*/details.csv`.
    #[arg(long)]
    pub traces: PathBuf,
    /// Observations to explain, evenly spaced over the traces.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// beta, rho or omega
    #[arg(long)]
    pub parameter: String,
    /// Comma-separated strategies.
    #[arg(long, default_value = "random,fixed0,fixed1")]
    pub strategies: String,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Defaults to `<run-dir>/report`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse arguments, run, print errors and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load_with_env(cli.config.as_deref())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(&config, a),
        Command::Train(a) => train_cmd(config, a),
        Command::Evaluate(a) => evaluate_cmd(&config, a),
        Command::Explain(a) => explain_cmd(&config, a),
        Command::Sweep(a) => sweep_cmd(&config, a),
        Command::Report(a) => report_cmd(&config, a),
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn simulate(config: &Config, a: SimulateArgs) -> Result<()> {
    let started = timestamp();
    let strategy: Strategy = a.strategy.parse()?;
    let cfg = ExperimentConfig {
        sim: config.sim(),
        strategy,
        replicas: a.replicas.unwrap_or(config.experiment.replicas),
        seed: a.seed.unwrap_or(config.experiment.seed),
    };
    let dir = a.out.join(cfg.strategy.label());
    create_dir(&dir)?;
    let out = run_experiment(&cfg, Some(&dir))?;
    let mut m = RunManifest::new("simulate", config.to_toml(), cfg.seeds(), started);
    m.add_files(&dir, &out.files)?;
    m.notes.push(format!("strategy = {}", cfg.strategy));
    let path = m.finish(&dir)?;
    println!(
        "simulate: {} replicas of {} -> {}",
        cfg.replicas,
        cfg.strategy,
        path.display()
    );
    Ok(())
}

fn train_cmd(mut config: Config, a: TrainArgs) -> Result<()> {
    let started = timestamp();
    if let Some(n) = a.instances {
        config.ppo.instances = n;
    }
    if let Some(n) = a.episodes {
        config.ppo.episodes = n;
    }
    if let Some(s) = a.seed {
        config.ppo.seed = s;
    }
    config.validate()?;
    create_dir(&a.out)?;
    let outcomes = train(&config.sim(), &config.ppo);
    let mut m = RunManifest::new(
        "train",
        config.to_toml(),
        vec![config.ppo.seed, config.ppo.eval_seed],
        started,
    );
    let mut files = Vec::new();
    let mut curve = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            Ok(o) => {
                let p = a.out.join(format!("instance_{i}.json"));
                o.checkpoint.save(&p)?;
                files.push(p);
                curve.extend_from_slice(&o.curve);
            }
            Err(e) => {
                eprintln!("instance {i}: {e}");
                m.notes.push(format!("instance {i}: {e}"));
            }
        }
    }
    let p = a.out.join("learning_curve.csv");
    write_learning_curve(&p, &curve)?;
    files.push(p);
    let Some(best) = best_instance(&outcomes) else {
        m.add_files(&a.out, &files)?;
        m.finish(&a.out)?;
        return Err(outcomes.into_iter().find_map(|o| o.err()).unwrap_or_else(|| {
            Error::Config("ppo.instances must be at least 1".into())
        }));
    };
    let ck = &outcomes[best].as_ref().expect("best instance trained").checkpoint;
    let p = a.out.join("best.json");
    let marker = serde_json::json!({
        "instance": best,
        "checkpoint": format!("instance_{best}.json"),
        "final_eval_mean": ck.final_eval_mean,
    });
    write_text(&p, &(serde_json::to_string_pretty(&marker).expect("json") + "\n"))?;
    files.push(p);
    m.add_files(&a.out, &files)?;
    m.best_instance = Some(best);
    m.finish(&a.out)?;
    println!(
        "train: best instance {best}, final evaluation mean {:.2}",
        ck.final_eval_mean
    );
    Ok(())
}

fn evaluate_cmd(config: &Config, a: EvaluateArgs) -> Result<()> {
    let started = timestamp();
    let ck = Checkpoint::load(&a.checkpoint)?;
    let mut ppo = config.ppo.clone();
    if let Some(n) = a.episodes {
        ppo.eval_episodes = n;
    }
    let seeds = ppo.eval_seeds();
    let sim = config.sim();
    let learned = evaluate(|| GreedyPolicy::new(ck.actor.clone()), &sim, &seeds)?;
    let random = evaluate(|| BernoulliPolicy::new(0.5), &sim, &seeds)?;
    create_dir(&a.out)?;
    let mut s = String::from("episode,seed,learned_return,random_return,learned_eta1,random_eta1\n");
    for (k, seed) in seeds.iter().enumerate() {
        let freq = |t: &crate::env::EpisodeTrace| {
            t.etas().iter().map(|&e| e as f64).sum::<f64>() / t.len().max(1) as f64
        };
        s.push_str(&format!(
            "{k},{seed},{},{},{},{}\n",
            learned.returns[k],
            random.returns[k],
            freq(&learned.traces[k]),
            freq(&random.traces[k])
        ));
    }
    let p = a.out.join("evaluation.csv");
    write_text(&p, &s)?;
    let mut m = RunManifest::new("evaluate", config.to_toml(), seeds.clone(), started);
    m.add_files(&a.out, &[p])?;
    m.notes.push(format!("checkpoint = {}", a.checkpoint.display()));
    m.finish(&a.out)?;
    let wins = learned
        .returns
        .iter()
        .zip(&random.returns)
        .filter(|(l, r)| l > r)
        .count();
    println!(
        "evaluate: learned {:.2} ({:.2}) vs random {:.2} ({:.2}), learned ahead on {wins} of {} seeds",
        learned.mean,
        learned.std,
        random.mean,
        random.std,
        seeds.len()
    );
    Ok(())
}

fn explain_cmd(config: &Config, a: ExplainArgs) -> Result<()> {
    let started = timestamp();
    let ck = Checkpoint::load(&a.checkpoint)?;
    let obs: Vec<MdpObservation> = read_experiment_traces(&a.traces)?
        .into_iter()
        .flatten()
        .map(|r| r.observation)
        .collect();
    if obs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no observations under {}",
            a.traces.display()
        )));
    }
    let k = a.samples.clamp(1, obs.len());
    let samples: Vec<MdpObservation> = (0..k).map(|i| obs[i * obs.len() / k]).collect();
    let result = explain_actor(&ck.actor, &samples, &obs)?;
    let ranking = shap_summary(&result, &MdpObservation::NAMES);
    create_dir(&a.out)?;
    let shap = a.out.join("shap_values.csv");
    write_shap_csv(&shap, &result)?;
    let rank = a.out.join("shap_ranking.csv");
    write_ranking_csv(&rank, &ranking)?;
    let mut m = RunManifest::new("explain", config.to_toml(), Vec::new(), started);
    m.add_files(&a.out, &[shap, rank])?;
    m.notes.push(format!("checkpoint = {}", a.checkpoint.display()));
    m.notes.push(format!("traces = {}", a.traces.display()));
    m.finish(&a.out)?;
    let top = |c: u8| {
        ranking
            .iter()
            .find(|r| r.class == c && r.rank == 1)
            .map_or("-", |r| r.feature.as_str())
    };
    println!(
        "explain: {k} observations, top feature {} for eta=0 and {} for eta=1",
        top(0),
        top(1)
    );
    Ok(())
}

fn sweep_cmd(config: &Config, a: SweepArgs) -> Result<()> {
    let started = timestamp();
    let parameter: SweepParameter = a.parameter.parse()?;
    let strategies = a
        .strategies
        .split(',')
        .map(|s| {
            let s: Strategy = s.trim().parse()?;
            let p = s.resolve()?;
            Ok((s, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let base = ExperimentConfig {
        sim: config.sim(),
        strategy: strategies
            .first()
            .map(|s| s.0.clone())
            .ok_or_else(|| Error::InvalidInput("no strategies".into()))?,
        replicas: a.replicas.unwrap_or(config.experiment.replicas),
        seed: config.experiment.seed,
    };
    let grid = config.experiment.grid(parameter);
    let rows = sweep(&base, parameter, grid, &strategies)?;
    create_dir(&a.out)?;
    let p = a.out.join(format!("sweep_{parameter}.csv"));
    write_sweep_csv(&p, &rows)?;
    let mut m = RunManifest::new("sweep", config.to_toml(), base.seeds(), started);
    m.add_files(&a.out, &[p.clone()])?;
    m.finish(&a.out)?;
    println!("sweep: {} rows -> {}", rows.len(), p.display());
    Ok(())
}

fn report_cmd(config: &Config, a: ReportArgs) -> Result<()> {
    let started = timestamp();
    let report = build_report(&a.run_dir)?;
    let out = a.out.unwrap_or_else(|| a.run_dir.join("report"));
    let files = write_report(&report, &out)?;
    let mut m = RunManifest::new("report", config.to_toml(), Vec::new(), started);
    m.add_files(&out, &files)?;
    m.finish(&out)?;
    print!("{}", crate::analysis::report::render_text(&report));
    Ok(())
}
